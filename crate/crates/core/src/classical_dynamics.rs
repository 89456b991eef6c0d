//! Classical PDM Hamiltonians `H = Σ(P − eA)²/(2m₀m) + eφ + V`, their
//! equations of motion, and trajectory-level checks of the point
//! transformation.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mass_models::MassProfile;
use crate::numerics::Grid;
use crate::point_transform::{build_map, TransformMap};

/// `m₀` in units with `ħ = 2m₀ = 1`.
pub const DEFAULT_M0: f64 = 0.5;

/// Step for finite-difference field gradients.
pub const FD_GRADIENT_STEP: f64 = 1e-6;

pub type ScalarFieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFieldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// `J[j][k] = ∂_k A_j`.
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|k| {
            p[k] = x[k] + eps;
            let a = f(&p);
            p[k] = x[k] - eps;
            let b = f(&p);
            p[k] = x[k];
            (a - b) / (2.0 * eps)
        })
        .collect()
}

/// A scalar field with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    value: ScalarFieldFn,
    gradient: Option<VectorFieldFn>,
}

impl ScalarField {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            value: Arc::new(f),
            gradient: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(move |_| c).with_gradient(|x| vec![0.0; x.len()])
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    /// Analytic gradient when supplied, central differences otherwise.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.gradient {
            Some(g) => g(x),
            None => fd_gradient(&*self.value, x, FD_GRADIENT_STEP),
        }
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

/// A vector potential with an optional analytic Jacobian.
#[derive(Clone)]
pub struct VectorField {
    value: VectorFieldFn,
    jacobian: Option<JacobianFn>,
}

impl VectorField {
    pub fn new(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        VectorField {
            value: Arc::new(f),
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, j: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    /// `(B₀/2)(−x₂, x₁, 0)`.
    pub fn symmetric_gauge(b0: f64) -> Self {
        VectorField::new(move |x| vec![-0.5 * b0 * x[1], 0.5 * b0 * x[0], 0.0])
            .with_jacobian(move |_| vec![vec![0.0, -0.5 * b0, 0.0], vec![0.5 * b0, 0.0, 0.0], vec![0.0; 3]])
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.value)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        if let Some(j) = &self.jacobian {
            return j(x);
        }
        let d = x.len();
        let mut out = vec![vec![0.0; d]; d];
        let mut p = x.to_vec();
        let eps = FD_GRADIENT_STEP;
        for k in 0..d {
            p[k] = x[k] + eps;
            let a = self.value(&p);
            p[k] = x[k] - eps;
            let b = self.value(&p);
            p[k] = x[k];
            for j in 0..d {
                out[j][k] = (a[j] - b[j]) / (2.0 * eps);
            }
        }
        out
    }
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

/// Everything entering the Hamiltonian.
#[derive(Debug, Clone)]
pub struct ClassicalFields {
    pub dim: usize,
    pub mass: ScalarField,
    pub potential: ScalarField,
    pub scalar_potential: Option<ScalarField>,
    pub vector_potential: Option<VectorField>,
    pub charge: f64,
    pub m0: f64,
    /// Set when the mass is known to be constant (enables leapfrog).
    pub constant_mass: bool,
}

impl ClassicalFields {
    /// Free particle of unit mass in `dim` dimensions.
    pub fn new(dim: usize) -> Self {
        ClassicalFields {
            dim,
            mass: ScalarField::constant(1.0),
            potential: ScalarField::constant(0.0),
            scalar_potential: None,
            vector_potential: None,
            charge: 1.0,
            m0: DEFAULT_M0,
            constant_mass: true,
        }
    }

    pub fn with_mass(mut self, m: ScalarField) -> Self {
        self.mass = m;
        self.constant_mass = false;
        self
    }

    pub fn with_constant_mass(mut self, m: f64) -> Self {
        self.mass = ScalarField::constant(m);
        self.constant_mass = true;
        self
    }

    /// `m(x₀)` from a 1D profile, or `m(|x|)` when the profile is radial.
    pub fn with_mass_profile(self, m: &MassProfile) -> Self {
        let constant = m.is_constant();
        let (a, b) = (m.clone(), m.clone());
        let radial = m.is_radial() || self.dim > 1;
        let field = if radial {
            ScalarField::new(move |x| a.value(norm(x))).with_gradient(move |x| {
                let r = norm(x);
                let d = if r > 0.0 { b.derivative(r) / r } else { 0.0 };
                x.iter().map(|v| d * v).collect()
            })
        } else {
            ScalarField::new(move |x| a.value(x[0])).with_gradient(move |x| vec![b.derivative(x[0])])
        };
        let mut out = self.with_mass(field);
        out.constant_mass = constant;
        out
    }

    pub fn with_potential(mut self, v: ScalarField) -> Self {
        self.potential = v;
        self
    }

    pub fn with_scalar_potential(mut self, phi: ScalarField) -> Self {
        self.scalar_potential = Some(phi);
        self
    }

    pub fn with_vector_potential(mut self, a: VectorField) -> Self {
        self.vector_potential = Some(a);
        self
    }

    pub fn with_charge(mut self, e: f64) -> Self {
        self.charge = e;
        self
    }

    pub fn with_m0(mut self, m0: f64) -> Self {
        self.m0 = m0;
        self
    }

    fn mass_at(&self, x: &[f64]) -> Result<f64> {
        let m = self.mass.value(x);
        if m > 0.0 && m.is_finite() {
            Ok(m)
        } else {
            Err(Error::domain(
                format!("mass must be positive, got {m}"),
                x.first().copied().unwrap_or(0.0),
            ))
        }
    }

    fn a_at(&self, x: &[f64]) -> Vec<f64> {
        self.vector_potential
            .as_ref()
            .map_or_else(|| vec![0.0; x.len()], |a| a.value(x))
    }

    /// `W = eφ + V`.
    pub fn w(&self, x: &[f64]) -> f64 {
        let phi = self.scalar_potential.as_ref().map_or(0.0, |p| p.value(x));
        self.charge * phi + self.potential.value(x)
    }

    fn w_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.potential.gradient(x);
        if let Some(p) = &self.scalar_potential {
            for (gi, pi) in g.iter_mut().zip(p.gradient(x)) {
                *gi += self.charge * pi;
            }
        }
        g
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Phase-space point with canonical momentum `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub x: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    pub t: f64,
}

impl ClassicalState {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Self {
        ClassicalState { x, p, t: 0.0 }
    }

    /// State with velocity `v`: `P = m₀ m v + eA`.
    pub fn from_velocity(x: Vec<f64>, v: &[f64], fields: &ClassicalFields) -> Result<Self> {
        let m = fields.mass_at(&x)?;
        let a = fields.a_at(&x);
        let p = v
            .iter()
            .zip(&a)
            .map(|(v, a)| fields.m0 * m * v + fields.charge * a)
            .collect();
        Ok(ClassicalState::new(x, p))
    }

    fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.p).all(|v| v.is_finite())
    }
}

/// `H = (1/2m₀)[(P − eA)/√m]² + W`.
pub fn hamiltonian_eval(state: &ClassicalState, fields: &ClassicalFields) -> Result<f64> {
    let m = fields.mass_at(&state.x)?;
    let a = fields.a_at(&state.x);
    let k2: f64 = state
        .p
        .iter()
        .zip(&a)
        .map(|(p, a)| (p - fields.charge * a).powi(2))
        .sum();
    Ok(k2 / (2.0 * fields.m0 * m) + fields.w(&state.x))
}

/// `π_j = P_j/√m`.
pub fn pseudo_momentum(state: &ClassicalState, fields: &ClassicalFields) -> Result<Vec<f64>> {
    let s = fields.mass_at(&state.x)?.sqrt();
    Ok(state.p.iter().map(|p| p / s).collect())
}

/// The same energy written with the pseudo-momentum,
/// `H = Σ(π_j − eA_j/√m)²/(2m₀) + W`.
pub fn hamiltonian_pseudo(state: &ClassicalState, fields: &ClassicalFields) -> Result<f64> {
    let pi = pseudo_momentum(state, fields)?;
    let s = fields.mass_at(&state.x)?.sqrt();
    let a = fields.a_at(&state.x);
    let k2: f64 = pi
        .iter()
        .zip(&a)
        .map(|(p, a)| (p - fields.charge * a / s).powi(2))
        .sum();
    Ok(k2 / (2.0 * fields.m0) + fields.w(&state.x))
}

/// `ẋ_j = (P_j − eA_j)/(m₀m)`.
pub fn velocity(state: &ClassicalState, fields: &ClassicalFields) -> Result<Vec<f64>> {
    let m = fields.mass_at(&state.x)?;
    let a = fields.a_at(&state.x);
    Ok(state
        .p
        .iter()
        .zip(&a)
        .map(|(p, a)| (p - fields.charge * a) / (fields.m0 * m))
        .collect())
}

/// Hamilton's equations `(ẋ, Ṗ) = (∂H/∂P, −∂H/∂x)`.
pub fn eom_rhs(state: &ClassicalState, fields: &ClassicalFields) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = &state.x;
    let d = x.len();
    let m = fields.mass_at(x)?;
    let e = fields.charge;
    let a = fields.a_at(x);
    let kin: Vec<f64> = state.p.iter().zip(&a).map(|(p, a)| p - e * a).collect();
    let k2: f64 = kin.iter().map(|k| k * k).sum();
    let xdot: Vec<f64> = kin.iter().map(|k| k / (fields.m0 * m)).collect();
    let gm = if fields.constant_mass {
        vec![0.0; d]
    } else {
        fields.mass.gradient(x)
    };
    let gw = fields.w_gradient(x);
    let jac = fields.vector_potential.as_ref().map(|v| v.jacobian(x));
    let pdot = (0..d)
        .map(|k| {
            let mut f = k2 * gm[k] / (2.0 * fields.m0 * m * m) - gw[k];
            if let Some(j) = &jac {
                f += e * (0..d).map(|i| kin[i] * j[i][k]).sum::<f64>() / (fields.m0 * m);
            }
            f
        })
        .collect();
    Ok((xdot, pdot))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
    Leapfrog,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Scheme::Rk4),
            "leapfrog" => Ok(Scheme::Leapfrog),
            other => Err(Error::UnsupportedScheme(format!("{other} (expected rk4 or leapfrog)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub samples: Vec<ClassicalState>,
    pub energies: Vec<f64>,
    /// `max |E(t) − E(0)| / |E(0)|` (absolute when `E(0) = 0`).
    pub drift: f64,
    pub scheme: Scheme,
    pub dt: f64,
    /// Why the trajectory stopped early, if it did.
    pub diagnostic: Option<String>,
}

impl TrajectoryResult {
    pub fn final_state(&self) -> &ClassicalState {
        self.samples.last().expect("trajectory holds the initial state")
    }

    pub fn is_complete(&self) -> bool {
        self.diagnostic.is_none()
    }

    /// Columns `t, x_1.., P_1.., E`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let d = self.samples.first().map_or(0, |s| s.x.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        header.extend((1..=d).map(|i| format!("P{i}")));
        header.push("E".into());
        out.write_record(&header)?;
        for (s, e) in self.samples.iter().zip(&self.energies) {
            let mut row = vec![format!("{:.16e}", s.t)];
            row.extend(s.x.iter().chain(&s.p).map(|v| format!("{v:.16e}")));
            row.push(format!("{e:.16e}"));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

fn rk4_step(s: &ClassicalState, fields: &ClassicalFields, dt: f64) -> Result<ClassicalState> {
    let at = |x: Vec<f64>, p: Vec<f64>| ClassicalState { x, p, t: s.t };
    let (k1x, k1p) = eom_rhs(s, fields)?;
    let (k2x, k2p) = eom_rhs(&at(axpy(&s.x, 0.5 * dt, &k1x), axpy(&s.p, 0.5 * dt, &k1p)), fields)?;
    let (k3x, k3p) = eom_rhs(&at(axpy(&s.x, 0.5 * dt, &k2x), axpy(&s.p, 0.5 * dt, &k2p)), fields)?;
    let (k4x, k4p) = eom_rhs(&at(axpy(&s.x, dt, &k3x), axpy(&s.p, dt, &k3p)), fields)?;
    let comb = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..y.len())
            .map(|i| y[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    Ok(ClassicalState {
        x: comb(&s.x, &k1x, &k2x, &k3x, &k4x),
        p: comb(&s.p, &k1p, &k2p, &k3p, &k4p),
        t: s.t + dt,
    })
}

fn leapfrog_step(s: &ClassicalState, fields: &ClassicalFields, dt: f64) -> Result<ClassicalState> {
    let m = fields.mass_at(&s.x)?;
    let half = axpy(&s.p, -0.5 * dt, &fields.w_gradient(&s.x));
    let x = axpy(&s.x, dt / (fields.m0 * m), &half);
    let p = axpy(&half, -0.5 * dt, &fields.w_gradient(&x));
    Ok(ClassicalState { x, p, t: s.t + dt })
}

/// Integrates `steps` steps of size `dt`. A non-finite state or a field
/// evaluation failure ends the trajectory early with a diagnostic.
pub fn integrate(
    state0: &ClassicalState,
    fields: &ClassicalFields,
    dt: f64,
    steps: usize,
    scheme: Scheme,
) -> Result<TrajectoryResult> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if state0.x.len() != fields.dim || state0.p.len() != fields.dim {
        return Err(Error::InvalidArgument(format!(
            "state dimension {} / {} does not match fields dimension {}",
            state0.x.len(),
            state0.p.len(),
            fields.dim
        )));
    }
    if scheme == Scheme::Leapfrog && (!fields.constant_mass || fields.vector_potential.is_some()) {
        return Err(Error::UnsupportedScheme(
            "leapfrog needs a constant mass and no vector potential".into(),
        ));
    }
    let e0 = hamiltonian_eval(state0, fields)?;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut energies = Vec::with_capacity(steps + 1);
    samples.push(state0.clone());
    energies.push(e0);
    let mut diagnostic = None;
    let mut cur = state0.clone();
    for step in 0..steps {
        let next = match scheme {
            Scheme::Rk4 => rk4_step(&cur, fields, dt),
            Scheme::Leapfrog => leapfrog_step(&cur, fields, dt),
        };
        let next = match next {
            Ok(s) if s.is_finite() => s,
            Ok(_) => {
                diagnostic = Some(format!("non-finite state at step {} (t = {})", step + 1, cur.t + dt));
                break;
            }
            Err(err) => {
                diagnostic = Some(format!("step {} failed at t = {}: {err}", step + 1, cur.t));
                break;
            }
        };
        match hamiltonian_eval(&next, fields) {
            Ok(e) if e.is_finite() => energies.push(e),
            _ => {
                diagnostic = Some(format!("energy not finite at t = {}", next.t));
                break;
            }
        }
        samples.push(next.clone());
        cur = next;
    }
    let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
    let drift = energies.iter().map(|e| (e - e0).abs() / scale).fold(0.0, f64::max);
    Ok(TrajectoryResult {
        samples,
        energies,
        drift,
        scheme,
        dt,
        diagnostic,
    })
}

/// `max |P − (m₀mẋ + eA)|` over the samples.
pub fn legendre_residual(traj: &TrajectoryResult, fields: &ClassicalFields) -> Result<f64> {
    let mut worst = 0.0_f64;
    for s in &traj.samples {
        let v = velocity(s, fields)?;
        let m = fields.mass_at(&s.x)?;
        let a = fields.a_at(&s.x);
        for j in 0..s.p.len() {
            worst = worst.max((s.p[j] - (fields.m0 * m * v[j] + fields.charge * a[j])).abs());
        }
    }
    Ok(worst)
}

/// Largest gap between `eom_rhs` and central differences of
/// `hamiltonian_eval` with step `eps`, over both `x` and `P`.
pub fn gradient_check(state: &ClassicalState, fields: &ClassicalFields, eps: f64) -> Result<f64> {
    let (xdot, pdot) = eom_rhs(state, fields)?;
    let mut worst = 0.0_f64;
    for k in 0..state.x.len() {
        let mut a = state.clone();
        let mut b = state.clone();
        a.x[k] += eps;
        b.x[k] -= eps;
        let dhdx = (hamiltonian_eval(&a, fields)? - hamiltonian_eval(&b, fields)?) / (2.0 * eps);
        worst = worst.max((dhdx + pdot[k]).abs());
        let mut a = state.clone();
        let mut b = state.clone();
        a.p[k] += eps;
        b.p[k] -= eps;
        let dhdp = (hamiltonian_eval(&a, fields)? - hamiltonian_eval(&b, fields)?) / (2.0 * eps);
        worst = worst.max((dhdp - xdot[k]).abs());
    }
    Ok(worst)
}

pub type LineFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Setup for the 1D trajectory comparison between the PDM system in `x`
/// and the constant-mass system in `q`.
#[derive(Clone)]
pub struct EquivalenceSetup {
    pub mass: MassProfile,
    pub v_q: LineFn,
    /// Optional vector potential `A(x)`.
    pub a_x: Option<LineFn>,
    pub charge: f64,
    pub m0: f64,
    /// Grid on which the map `q(x)` is tabulated.
    pub map_grid: Grid,
    /// Point where `q = 0`.
    pub anchor_x: f64,
}

impl EquivalenceSetup {
    pub fn new(mass: MassProfile, v_q: impl Fn(f64) -> f64 + Send + Sync + 'static, map_grid: Grid) -> Self {
        EquivalenceSetup {
            mass,
            v_q: Arc::new(v_q),
            a_x: None,
            charge: 1.0,
            m0: DEFAULT_M0,
            map_grid,
            anchor_x: 0.0,
        }
    }

    pub fn with_vector_potential(mut self, a: impl Fn(f64) -> f64 + Send + Sync + 'static, charge: f64) -> Self {
        self.a_x = Some(Arc::new(a));
        self.charge = charge;
        self
    }

    pub fn with_anchor(mut self, x: f64) -> Self {
        self.anchor_x = x;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub max_discrepancy: f64,
    pub t_at_max: f64,
    pub final_time: f64,
    pub direct_drift: f64,
    pub mapped_drift: f64,
}

fn line_derivative(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = FD_GRADIENT_STEP;
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// The x-space fields: `H = (P − eA(x))²/(2m₀m) + V(q(x))`.
pub fn direct_fields(setup: &EquivalenceSetup, map: &Arc<TransformMap>) -> ClassicalFields {
    let (m1, m2) = (setup.mass.clone(), setup.mass.clone());
    let mass = ScalarField::new(move |x| m1.value(x[0])).with_gradient(move |x| vec![m2.derivative(x[0])]);
    let (v1, v2) = (setup.v_q.clone(), setup.v_q.clone());
    let (map1, map2) = (map.clone(), map.clone());
    let m3 = setup.mass.clone();
    let potential = ScalarField::new(move |x| map1.q_at(x[0]).map_or(f64::NAN, |q| v1(q))).with_gradient(move |x| {
        let g = map2
            .q_at(x[0])
            .map_or(f64::NAN, |q| line_derivative(&*v2, q) * m3.value(x[0]).sqrt());
        vec![g]
    });
    let mut f = ClassicalFields::new(1)
        .with_mass(mass)
        .with_potential(potential)
        .with_charge(setup.charge)
        .with_m0(setup.m0);
    if let Some(a) = &setup.a_x {
        let (a1, a2) = (a.clone(), a.clone());
        f = f.with_vector_potential(
            VectorField::new(move |x| vec![a1(x[0])]).with_jacobian(move |x| vec![vec![line_derivative(&*a2, x[0])]]),
        );
    }
    f
}

/// The q-space fields: `H = (p − eA(x(q))/√m)²/(2m₀) + V(q)`.
pub fn mapped_fields(setup: &EquivalenceSetup, map: &Arc<TransformMap>) -> ClassicalFields {
    let v = setup.v_q.clone();
    let potential = ScalarField::new(move |q| v(q[0]));
    let mut f = ClassicalFields::new(1)
        .with_constant_mass(1.0)
        .with_potential(potential)
        .with_charge(setup.charge)
        .with_m0(setup.m0);
    if let Some(a) = &setup.a_x {
        let a = a.clone();
        let m = setup.mass.clone();
        let map = map.clone();
        f = f.with_vector_potential(VectorField::new(move |q| {
            let aq = map.x_at(q[0]).map_or(f64::NAN, |x| a(x) / m.value(x).sqrt());
            vec![aq]
        }));
    }
    f
}

/// Integrates the PDM system in `x` and the constant-mass system in `q`
/// from matching data (`q̇ = √m ẋ`), maps `q(t)` back through the inverse
/// transform and returns the largest position discrepancy.
pub fn transform_equivalence_check(
    setup: &EquivalenceSetup,
    x0: f64,
    v0: f64,
    dt: f64,
    steps: usize,
) -> Result<EquivalenceReport> {
    let map = Arc::new(build_map(&setup.mass, &setup.map_grid)?.reanchored(setup.anchor_x)?);
    let direct = direct_fields(setup, &map);
    let mapped = mapped_fields(setup, &map);
    let q0 = map.q_at(x0)?;
    let s0 = ClassicalState::from_velocity(vec![x0], &[v0], &direct)?;
    let qdot0 = setup.mass.checked_value(x0)?.sqrt() * v0;
    let t0 = ClassicalState::from_velocity(vec![q0], &[qdot0], &mapped)?;
    let a = integrate(&s0, &direct, dt, steps, Scheme::Rk4)?;
    let b = integrate(&t0, &mapped, dt, steps, Scheme::Rk4)?;
    let (lo, hi) = (setup.map_grid.min(), setup.map_grid.max());
    let exit = |traj: &TrajectoryResult| {
        traj.samples
            .iter()
            .find(|s| !(lo..=hi).contains(&s.x[0]))
            .map(|s| s.t)
            .or_else(|| (!traj.is_complete()).then(|| traj.final_state().t + dt))
    };
    if let Some(t) = exit(&a) {
        return Err(Error::LeftDomain { t });
    }
    let (qlo, qhi) = map.q_range();
    if let Some(s) = b.samples.iter().find(|s| !(qlo..=qhi).contains(&s.x[0])) {
        return Err(Error::LeftDomain { t: s.t });
    }
    if !b.is_complete() {
        return Err(Error::LeftDomain {
            t: b.final_state().t + dt,
        });
    }
    let mut worst = 0.0_f64;
    let mut t_at = 0.0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        let xm = map.x_at(sb.x[0])?;
        let d = (sa.x[0] - xm).abs();
        if d > worst {
            worst = d;
            t_at = sa.t;
        }
    }
    Ok(EquivalenceReport {
        max_discrepancy: worst,
        t_at_max: t_at,
        final_time: a.final_state().t,
        direct_drift: a.drift,
        mapped_drift: b.drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn harmonic(k: f64) -> ScalarField {
        ScalarField::new(move |x| k * x.iter().map(|v| v * v).sum::<f64>())
            .with_gradient(move |x| x.iter().map(|v| 2.0 * k * v).collect())
    }

    #[test]
    fn energy_examples() {
        let f = ClassicalFields::new(3);
        let s = ClassicalState::new(vec![0.0; 3], vec![1.0, 0.0, 0.0]);
        assert_eq!(hamiltonian_eval(&s, &f).unwrap(), 1.0);
        let f4 = ClassicalFields::new(3).with_constant_mass(4.0);
        assert_eq!(hamiltonian_eval(&s, &f4).unwrap(), 0.25);
        let pdm = ClassicalFields::new(1)
            .with_mass_profile(&MassProfile::inverse_quartic())
            .with_potential(harmonic(1.0));
        let s = ClassicalState::new(vec![0.7], vec![1.3]);
        let a = hamiltonian_eval(&s, &pdm).unwrap();
        let b = hamiltonian_pseudo(&s, &pdm).unwrap();
        assert!((a - b).abs() < 1e-14);
        let bad = ClassicalFields::new(1).with_mass(ScalarField::new(|x| -x[0]));
        assert!(matches!(hamiltonian_eval(&s, &bad), Err(Error::Domain { .. })));
    }

    #[test]
    fn constant_mass_rhs_reduces_to_newton() {
        let f = ClassicalFields::new(2).with_potential(harmonic(1.5));
        let s = ClassicalState::new(vec![0.3, -0.4], vec![1.0, 2.0]);
        let (xd, pd) = eom_rhs(&s, &f).unwrap();
        assert_eq!(xd, vec![2.0, 4.0]);
        assert!((pd[0] + 0.9).abs() < 1e-15 && (pd[1] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn free_particle_moves_in_a_line() {
        let f = ClassicalFields::new(3);
        let s = ClassicalState::new(vec![1.0, 0.0, 0.0], vec![0.5, -0.25, 0.0]);
        let t = integrate(&s, &f, 0.01, 100, Scheme::Rk4).unwrap();
        let end = t.final_state();
        assert!((end.x[0] - 2.0).abs() < 1e-12 && (end.x[1] + 0.5).abs() < 1e-12);
        assert!((end.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cyclotron_orbit_matches_analytic_circle() {
        let (b0, e) = (1.5, -1.0);
        let f = ClassicalFields::new(3)
            .with_vector_potential(VectorField::symmetric_gauge(b0))
            .with_charge(e);
        let v = 0.8;
        let s = ClassicalState::from_velocity(vec![0.0, 0.0, 0.0], &[v, 0.0, 0.0], &f).unwrap();
        let omega = (e * b0).abs() / f.m0;
        let period = 2.0 * PI / omega;
        let steps = 4000;
        let traj = integrate(&s, &f, period / steps as f64, steps, Scheme::Rk4).unwrap();
        // Signed angular frequency: the velocity rotates by −eB₀/m₀.
        let w = -e * b0 / f.m0;
        let radius = v / omega;
        let mut worst = 0.0_f64;
        for st in &traj.samples {
            let t = st.t;
            let xa = v / w * (w * t).sin();
            let ya = v / w * (1.0 - (w * t).cos());
            worst = worst.max((st.x[0] - xa).hypot(st.x[1] - ya));
        }
        assert!(worst < 1e-9 * radius.max(1.0), "{worst:e}");
        assert!(traj.drift < 1e-10);
        assert!(legendre_residual(&traj, &f).unwrap() < 1e-13);
    }

    #[test]
    fn harmonic_ten_periods_conserves_energy_and_period() {
        let f = ClassicalFields::new(1).with_potential(harmonic(1.0));
        let omega = (2.0 / f.m0).sqrt();
        let period = 2.0 * PI / omega;
        let steps = 20_000;
        let s = ClassicalState::new(vec![1.0], vec![0.0]);
        let traj = integrate(&s, &f, 10.0 * period / steps as f64, steps, Scheme::Rk4).unwrap();
        assert!(traj.drift <= 1e-8, "{:e}", traj.drift);
        assert!((traj.final_state().x[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rk4_drift_is_fourth_order() {
        let f = ClassicalFields::new(1)
            .with_mass_profile(&MassProfile::inverse_quartic())
            .with_potential(harmonic(1.0));
        let s = ClassicalState::new(vec![0.8], vec![0.0]);
        let a = integrate(&s, &f, 0.02, 500, Scheme::Rk4).unwrap();
        let b = integrate(&s, &f, 0.01, 1000, Scheme::Rk4).unwrap();
        let ratio = a.drift / b.drift;
        assert!(ratio > 10.0 && ratio < 40.0, "{ratio}");
    }

    #[test]
    fn leapfrog_drift_is_bounded() {
        let f = ClassicalFields::new(1).with_potential(harmonic(1.0));
        let period = 2.0 * PI / (2.0 / f.m0).sqrt();
        let dt = period / 200.0;
        let s = ClassicalState::new(vec![1.0], vec![0.0]);
        let ten = integrate(&s, &f, dt, 2000, Scheme::Leapfrog).unwrap();
        let hundred = integrate(&s, &f, dt, 20_000, Scheme::Leapfrog).unwrap();
        assert!(ten.drift < 1e-3);
        assert!(hundred.drift < 1.01 * ten.drift, "{} vs {}", hundred.drift, ten.drift);
        let pdm = ClassicalFields::new(1).with_mass_profile(&MassProfile::inverse_quartic());
        assert!(matches!(
            integrate(&s, &pdm, dt, 10, Scheme::Leapfrog),
            Err(Error::UnsupportedScheme(_))
        ));
    }

    #[test]
    fn gradient_check_second_order() {
        let f = ClassicalFields::new(1)
            .with_mass_profile(&MassProfile::inverse_quartic())
            .with_potential(harmonic(1.0));
        let s = ClassicalState::new(vec![0.6], vec![0.9]);
        assert!(gradient_check(&s, &f, 1e-5).unwrap() < 1e-8);
        let a = gradient_check(&s, &f, 2e-2).unwrap();
        let b = gradient_check(&s, &f, 1e-2).unwrap();
        assert!((a / b - 4.0).abs() < 0.2, "{}", a / b);
    }

    #[test]
    fn fd_fallback_matches_analytic_gradients() {
        let m = MassProfile::inverse_quartic();
        let analytic = ClassicalFields::new(1)
            .with_mass_profile(&m)
            .with_potential(harmonic(1.0));
        let mm = m.clone();
        let fd = ClassicalFields::new(1)
            .with_mass(ScalarField::new(move |x| mm.value(x[0])))
            .with_potential(ScalarField::new(|x| x[0] * x[0]));
        let s = ClassicalState::new(vec![0.6], vec![0.9]);
        let (_, a) = eom_rhs(&s, &analytic).unwrap();
        let (_, b) = eom_rhs(&s, &fd).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-8);
    }

    #[test]
    fn identity_map_equivalence_is_exact() {
        let setup = EquivalenceSetup::new(MassProfile::unit(), |q| q * q, Grid::uniform(-3.0, 3.0, 601).unwrap());
        let r = transform_equivalence_check(&setup, 0.5, 0.3, 1e-3, 2000).unwrap();
        assert!(r.max_discrepancy < 1e-13, "{:e}", r.max_discrepancy);
    }

    #[test]
    fn pdm_equivalence_over_one_period() {
        let setup = EquivalenceSetup::new(
            MassProfile::inverse_quartic(),
            |q| q * q,
            Grid::uniform(-4.0, 4.0, 8001).unwrap(),
        );
        let steps = (PI / 1e-4).round() as usize;
        let r = transform_equivalence_check(&setup, 0.5, 0.0, 1e-4, steps).unwrap();
        assert!(r.max_discrepancy <= 1e-6, "{:e}", r.max_discrepancy);
    }

    #[test]
    fn coupled_forms_give_the_same_trajectory() {
        let setup = EquivalenceSetup::new(
            MassProfile::inverse_quartic(),
            |q| q * q,
            Grid::uniform(-4.0, 4.0, 8001).unwrap(),
        )
        .with_vector_potential(|x| 0.3 * x + 0.1 * x * x, 1.0);
        let r = transform_equivalence_check(&setup, 0.5, 0.2, 1e-3, 3000).unwrap();
        assert!(r.max_discrepancy <= 1e-6, "{:e}", r.max_discrepancy);
    }

    #[test]
    fn leaving_the_map_is_reported() {
        let setup = EquivalenceSetup::new(MassProfile::unit(), |_| 0.0, Grid::uniform(-1.0, 1.0, 201).unwrap());
        let err = transform_equivalence_check(&setup, 0.0, 1.0, 1e-2, 200).unwrap_err();
        match err {
            Error::LeftDomain { t } => assert!((t - 1.0).abs() < 0.02, "{t}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_finite_state_truncates() {
        // The mass turns negative once the particle is pushed past the origin.
        let f = ClassicalFields::new(1)
            .with_mass(ScalarField::new(|x| x[0]).with_gradient(|_| vec![1.0]))
            .with_potential(ScalarField::new(|x| 10.0 * x[0]));
        let s = ClassicalState::new(vec![0.5], vec![0.0]);
        let t = integrate(&s, &f, 0.1, 100, Scheme::Rk4).unwrap();
        assert!(!t.is_complete());
        assert!(t.samples.len() < 101);
        assert!(t.diagnostic.unwrap().contains("failed"));
    }
}
