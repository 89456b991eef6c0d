//! Minimal coupling for position-dependent masses: vector potentials of the
//! form `A(q(x)) = (S/√m) Ã(x)`, the Coulomb-gauge eligibility test, and the
//! two exactly solvable constant-field examples.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::mass_models::{MassProfile, ScalarMultiplier};
use crate::numerics::{simpson, Grid};
use crate::operators::{
    build_pseudo_momentum, build_reduced_pdm, central_difference, interior_mass, polynomial_test_basis, PotentialSpec,
};
use crate::point_transform::{radial_map_point, GriddedWavefunction, Measure};
use crate::spectral_solver::{solve_symmetric, SpectrumResult};

/// Tolerance on the divergence residual for calling a potential eligible.
pub const ELIGIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeFamily {
    /// `Ã = B₀(−x₂, 0, 0)`
    Landau,
    /// `Ã = (B₀/2)(−x₂, x₁, 0)`
    Symmetric,
}

impl GaugeFamily {
    /// `Ã(x)` for field amplitude `b0`.
    pub fn potential(self, b0: f64, x: [f64; 3]) -> [f64; 3] {
        match self {
            GaugeFamily::Landau => [-b0 * x[1], 0.0, 0.0],
            GaugeFamily::Symmetric => [-0.5 * b0 * x[1], 0.5 * b0 * x[0], 0.0],
        }
    }

    /// `∂_j Ã_j`, zero for both families.
    pub fn divergence(self, _b0: f64, _x: [f64; 3]) -> f64 {
        0.0
    }

    /// `∇ × Ã`; both families carry the uniform field `(0, 0, B₀)`.
    pub fn curl(self, b0: f64) -> [f64; 3] {
        [0.0, 0.0, b0]
    }
}

/// `A(q(x)) = (S(r)/√m(r)) Ã(x)`.
#[derive(Debug, Clone)]
pub struct VectorPotentialSpec {
    pub family: GaugeFamily,
    pub b0: f64,
    pub scalar: ScalarMultiplier,
    pub mass: MassProfile,
}

fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

impl VectorPotentialSpec {
    pub fn new(family: GaugeFamily, b0: f64, scalar: ScalarMultiplier, mass: MassProfile) -> Self {
        VectorPotentialSpec {
            family,
            b0,
            scalar,
            mass,
        }
    }

    pub fn a_tilde(&self, x: [f64; 3]) -> [f64; 3] {
        self.family.potential(self.b0, x)
    }

    /// The full potential in q coordinates evaluated at `x`.
    pub fn a_of_q(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let r = norm3(x);
        let f = self.scalar.value(r) / self.mass.checked_value(r)?.sqrt();
        let a = self.a_tilde(x);
        Ok([f * a[0], f * a[1], f * a[2]])
    }

    /// `(S/m)[∂_jÃ_j + (x_jÃ_j/r)(S'/S − m'/2m)]` at `x`.
    pub fn divergence_term(&self, x: [f64; 3]) -> Result<f64> {
        let r = norm3(x);
        if r == 0.0 {
            return Err(Error::domain("divergence needs r > 0", r));
        }
        let m = self.mass.checked_value(r)?;
        let s = self.scalar.value(r);
        let a = self.a_tilde(x);
        let x_dot_a = x[0] * a[0] + x[1] * a[1] + x[2] * a[2];
        let log_slope = self.scalar.derivative(r) / s - self.mass.derivative(r) / (2.0 * m);
        Ok(s / m * (self.family.divergence(self.b0, x) + x_dot_a / r * log_slope))
    }
}

/// Outcome of sampling the gauge divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub family: GaugeFamily,
    pub max_residual: f64,
    pub worst_point: Option<[f64; 3]>,
    pub samples: usize,
    /// Points skipped because they sit at the origin.
    pub skipped: Vec<[f64; 3]>,
}

pub fn gauge_divergence_residual(spec: &VectorPotentialSpec, points: &[[f64; 3]]) -> Result<GaugeReport> {
    let mut worst = 0.0_f64;
    let mut worst_point = None;
    let mut skipped = Vec::new();
    for &p in points {
        if norm3(p) == 0.0 {
            skipped.push(p);
            continue;
        }
        let res = spec.divergence_term(p)?.abs();
        if worst_point.is_none() || res > worst {
            worst = res;
            worst_point = Some(p);
        }
    }
    Ok(GaugeReport {
        family: spec.family,
        max_residual: worst,
        worst_point,
        samples: points.len() - skipped.len(),
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eligibility {
    pub eligible: bool,
    pub reason: String,
    pub worst_point: Option<[f64; 3]>,
    pub max_residual: f64,
}

/// Whether the Coulomb gauge survives the point transformation on `points`.
pub fn eligibility(spec: &VectorPotentialSpec, points: &[[f64; 3]]) -> Result<Eligibility> {
    let rep = gauge_divergence_residual(spec, points)?;
    let eligible = rep.max_residual <= ELIGIBILITY_TOL;
    let reason = if eligible {
        match spec.family {
            GaugeFamily::Symmetric => "x_j Ã_j vanishes identically, so the divergence term is zero".to_string(),
            GaugeFamily::Landau => "S'/S − m'/2m vanishes on the samples (constant mass)".to_string(),
        }
    } else {
        format!(
            "x_j Ã_j (S'/S − m'/2m) is non-zero: residual {:.3e} exceeds {:.0e}",
            rep.max_residual, ELIGIBILITY_TOL
        )
    };
    Ok(Eligibility {
        eligible,
        reason,
        worst_point: rep.worst_point,
        max_residual: rep.max_residual,
    })
}

/// `count` points with directions uniform on the sphere and radii uniform
/// in `[r_min, r_max]`, from a fixed seed.
pub fn shell_points(count: usize, r_min: f64, r_max: f64, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let d: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let n = norm3(d);
            if n > 1e-12 {
                let r = rng.random_range(r_min..=r_max);
                break [r * d[0] / n, r * d[1] / n, r * d[2] / n];
            }
        })
        .collect()
}

/// Second-order finite-difference curl of a vector field.
pub fn curl_fd(f: impl Fn([f64; 3]) -> [f64; 3], x: [f64; 3], h: f64) -> [f64; 3] {
    let d = |j: usize, i: usize| {
        let mut p = x;
        let mut q = x;
        p[i] += h;
        q[i] -= h;
        (f(p)[j] - f(q)[j]) / (2.0 * h)
    };
    [d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)]
}

/// Constant magnetic field (symmetric gauge) plus an optional uniform
/// electric field along `q₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauConfig {
    pub b0: f64,
    pub charge: f64,
    /// Electric field amplitude, 0 when absent.
    pub field: f64,
    pub k1: f64,
    pub k3: f64,
}

impl LandauConfig {
    fn check(&self) -> Result<()> {
        if self.b0 == 0.0 || self.charge == 0.0 {
            return Err(Error::Singular(format!(
                "B0 = {} and e = {} must both be non-zero",
                self.b0, self.charge
            )));
        }
        Ok(())
    }

    /// `|e|B₀`, the oscillator frequency in these units.
    pub fn omega(&self) -> f64 {
        (self.charge * self.b0).abs()
    }

    /// `1/√(|e|B₀)`.
    pub fn oscillator_length(&self) -> f64 {
        1.0 / self.omega().sqrt()
    }

    /// `k₁/(eB₀) − 𝓔/(2eB₀²)`; the oscillator is centred at `q₂ = −shift`.
    pub fn shift(&self) -> f64 {
        let eb = self.charge * self.b0;
        self.k1 / eb - self.field / (2.0 * eb * self.b0)
    }

    /// Closed-form level `n`.
    pub fn energy(&self, n: usize) -> Result<f64> {
        if self.field == 0.0 {
            landau_energy(self.b0, self.charge, self.k1, self.k3, n as i64)
        } else {
            landau_energy_with_field(self.b0, self.charge, self.field, self.k1, self.k3, n as i64)
        }
    }

    /// `e²B₀²(q₂ + k₁/(eB₀))² + k₃² − e𝓔q₂`, the reduced potential before
    /// completing the square.
    pub fn reduced_potential(&self, q2: f64) -> f64 {
        let eb = self.charge * self.b0;
        let z = q2 + self.k1 / eb;
        eb * eb * z * z + self.k3 * self.k3 - self.charge * self.field * q2
    }
}

fn check_level(n: i64) -> Result<usize> {
    usize::try_from(n).map_err(|_| Error::domain("quantum number must be non-negative", n as f64))
}

/// `E_n = k₃² + (2n+1)|e|B₀`, independent of `k₁`.
pub fn landau_energy(b0: f64, charge: f64, _k1: f64, k3: f64, n: i64) -> Result<f64> {
    let n = check_level(n)?;
    Ok(k3 * k3 + (2 * n + 1) as f64 * (charge * b0).abs())
}

/// `E_n = (2n+1)|e|B₀ + k₃² + k₁𝓔/B₀ − 𝓔²/(4B₀²)`.
pub fn landau_energy_with_field(b0: f64, charge: f64, field: f64, k1: f64, k3: f64, n: i64) -> Result<f64> {
    let n = check_level(n)?;
    if b0 == 0.0 {
        return Err(Error::Singular("B0 = 0 with an electric field".into()));
    }
    Ok((2 * n + 1) as f64 * (charge * b0).abs() + k3 * k3 + k1 * field / b0 - field * field / (4.0 * b0 * b0))
}

/// Normalized Hermite functions `ψ_0 … ψ_nmax` at `x`,
/// `ψ_n = (2ⁿ n! √π)^(−1/2) H_n(x) e^(−x²/2)`.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    // Recurrence on the polynomial part with a running log scale so that
    // neither the Gaussian nor the polynomial overflows.
    let mut out = Vec::with_capacity(nmax + 1);
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    out.push(cur * log_scale.exp());
    for n in 0..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 1e100 {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
        out.push(cur * log_scale.exp());
    }
    out
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite_polynomial(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let c = 2.0 * x * b - 2.0 * k as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// Which shifted coordinate the oscillator is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftedCoordinate {
    /// `ζ = q₂ + k₁/(eB₀)`
    Zeta,
    /// `η = q₂ + k₁/(eB₀) − 𝓔/(2eB₀²)`
    Eta,
}

/// One analytic eigenstate of the constant-field problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauSolution {
    pub n: usize,
    pub config: LandauConfig,
    pub energy: f64,
    pub shifted_coordinate: ShiftedCoordinate,
}

impl LandauSolution {
    pub fn new(config: LandauConfig, n: usize) -> Result<Self> {
        config.check()?;
        Ok(LandauSolution {
            n,
            config,
            energy: config.energy(n)?,
            shifted_coordinate: if config.field == 0.0 {
                ShiftedCoordinate::Zeta
            } else {
                ShiftedCoordinate::Eta
            },
        })
    }

    /// Normalized `Y_n(q₂)`.
    pub fn y(&self, q2: f64) -> f64 {
        let w = self.config.omega();
        let s = w.sqrt();
        let t = s * (q2 + self.config.shift());
        w.powf(0.25) * hermite_functions(self.n, t)[self.n]
    }

    /// `ψ(q) = exp[i(k₁q₁ + k₃q₃ + (eB₀/2)q₁q₂)] Y_n(q₂)`.
    pub fn psi(&self, q: [f64; 3]) -> Complex64 {
        let c = &self.config;
        let phase = c.k1 * q[0] + c.k3 * q[2] + 0.5 * c.charge * c.b0 * q[0] * q[1];
        Complex64::from_polar(self.y(q[1]), phase)
    }
}

/// Numeric spectrum of the reduced equation against the closed forms.
#[derive(Debug, Clone)]
pub struct LandauNumeric {
    pub config: LandauConfig,
    pub q2_domain: (f64, f64),
    pub analytic: Vec<f64>,
    /// Richardson-combined when requested, otherwise the fine-grid values.
    pub numeric: Vec<f64>,
    pub rel_err: Vec<f64>,
    /// `|⟨Y_numeric, Y_analytic⟩|` on the fine grid.
    pub overlaps: Vec<f64>,
    pub spectrum: SpectrumResult,
    pub richardson: bool,
    /// Largest `|Y|` within two oscillator lengths of a wall, relative to the peak.
    pub wall_amplitude: f64,
}

/// Half-width of the default `q₂` domain in oscillator lengths.
pub const DEFAULT_DOMAIN_LENGTHS: f64 = 12.0;

/// Discretizes `−d²/dq₂² + e²B₀²(q₂ + k₁/(eB₀))² + k₃² − e𝓔q₂` and solves
/// for the `k` lowest levels. The default domain is centred on the
/// oscillator and spans ±12 oscillator lengths.
pub fn solve_example_numeric(
    config: LandauConfig,
    q2_domain: Option<(f64, f64)>,
    n_points: usize,
    k: usize,
    richardson: bool,
) -> Result<LandauNumeric> {
    config.check()?;
    let centre = -config.shift();
    let half = DEFAULT_DOMAIN_LENGTHS * config.oscillator_length();
    let domain = q2_domain.unwrap_or((centre - half, centre + half));
    let grid = Grid::uniform(domain.0, domain.1, n_points)?;
    let v = PotentialSpec::new(move |q| config.reduced_potential(q));
    let op = build_reduced_pdm(&MassProfile::unit(), &v, &grid)?;
    let spectrum = solve_symmetric(&op, k, true)?;
    let numeric = if richardson {
        let coarse = build_reduced_pdm(&MassProfile::unit(), &v, &grid.coarsened()?)?;
        let c = solve_symmetric(&coarse, k, false)?;
        spectrum
            .eigenvalues
            .iter()
            .zip(&c.eigenvalues)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect()
    } else {
        spectrum.eigenvalues.clone()
    };
    let analytic = (0..k).map(|n| config.energy(n)).collect::<Result<Vec<_>>>()?;
    let rel_err = numeric
        .iter()
        .zip(&analytic)
        .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
        .collect();
    let vecs = spectrum.eigenvectors.as_ref().expect("vectors requested");
    let mut overlaps = Vec::with_capacity(k);
    let mut wall_amplitude = 0.0_f64;
    let near_wall = 2.0 * config.oscillator_length();
    for (n, wf) in vecs.iter().enumerate() {
        let sol = LandauSolution::new(config, n)?;
        let prod: Vec<f64> = grid
            .points()
            .iter()
            .zip(&wf.values)
            .map(|(&q, v)| v.re * sol.y(q))
            .collect();
        overlaps.push(simpson(grid.points(), &prod).abs());
        let peak = wf.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (&q, v) in grid.points().iter().zip(&wf.values) {
            if q - domain.0 < near_wall || domain.1 - q < near_wall {
                wall_amplitude = wall_amplitude.max(v.norm() / peak);
            }
        }
    }
    Ok(LandauNumeric {
        config,
        q2_domain: domain,
        analytic,
        numeric,
        rel_err,
        overlaps,
        spectrum,
        richardson,
        wall_amplitude,
    })
}

/// `φ(x) = m(r)^(1/4) ψ(q(x))` with `q = (S/√m) x`.
pub fn build_pdm_eigenfunction(
    sol: &LandauSolution,
    m: &MassProfile,
    s: &ScalarMultiplier,
    points: &[[f64; 3]],
) -> Result<Vec<Complex64>> {
    points
        .iter()
        .map(|&x| {
            let q = radial_map_point(s, m, &x)?;
            let r = norm3(x);
            Ok(sol.psi([q[0], q[1], q[2]]) * m.checked_value(r)?.powf(0.25))
        })
        .collect()
}

/// Same as [`build_pdm_eigenfunction`] for the `q₂` profile alone, returned
/// as a gridded function (useful for plotting).
pub fn landau_profile(sol: &LandauSolution, grid: &Grid) -> GriddedWavefunction {
    GriddedWavefunction::sample(grid.clone(), Measure::Dq, |q| Complex64::new(sol.y(q), 0.0))
}

/// A 1D field and its derivative.
pub struct Field1d<'a> {
    pub value: &'a dyn Fn(f64) -> f64,
    pub derivative: &'a dyn Fn(f64) -> f64,
}

/// Expanded minimal-coupling operator
/// `H + ie A'/√m + 2ie (A/√m)[∂ − m'/4m] + e²A² + W` on the interior nodes.
pub fn build_expanded_coupling(
    m: &MassProfile,
    a: &Field1d<'_>,
    charge: f64,
    w: &PotentialSpec,
    grid: &Grid,
) -> Result<BandedMatrix> {
    let h = build_reduced_pdm(m, w, grid)?;
    let im = interior_mass(m, grid)?;
    let n = im.x.len();
    let d = central_difference(n, im.h);
    let corr: Vec<f64> = (0..n).map(|i| im.dm[i] / (4.0 * im.m[i])).collect();
    let a_over: Vec<f64> = (0..n).map(|i| (a.value)(im.x[i]) / im.m[i].sqrt()).collect();
    let mut bracket = d.clone();
    for (i, c) in corr.iter().enumerate() {
        bracket.add_to(i, i, Complex64::new(-c, 0.0));
    }
    let para = bracket.scale_rows(&a_over).scaled(Complex64::new(0.0, 2.0 * charge));
    let mut out = h.matrix.add(&para);
    for i in 0..n {
        let x = im.x[i];
        let av = (a.value)(x);
        let diag = Complex64::new(charge * charge * av * av, charge * (a.derivative)(x) / im.m[i].sqrt());
        out.add_to(i, i, diag);
    }
    Ok(out)
}

/// `(π̂ − eA)² + W` built as an explicit matrix product.
pub fn build_squared_coupling(
    m: &MassProfile,
    a: &Field1d<'_>,
    charge: f64,
    w: &PotentialSpec,
    grid: &Grid,
) -> Result<BandedMatrix> {
    let pi = build_pseudo_momentum(m, grid)?;
    let x = pi.interior().to_vec();
    let shift: Vec<f64> = x.iter().map(|&t| -charge * (a.value)(t)).collect();
    let k = pi.matrix.add_diagonal(&shift);
    let wv: Vec<f64> = x.iter().map(|&t| w.w(t)).collect();
    Ok(k.mul(&k).add_diagonal(&wv))
}

/// Largest discrepancy between the expanded and squared coupled operators
/// applied to the polynomial test basis, two nodes from each wall excluded.
pub fn minimal_coupling_identity_residual(
    m: &MassProfile,
    a: &Field1d<'_>,
    charge: f64,
    w: &PotentialSpec,
    grid: &Grid,
) -> Result<f64> {
    minimal_coupling_identity_residual_with(m, a, charge, w, grid, &polynomial_test_basis(grid))
}

pub fn minimal_coupling_identity_residual_with(
    m: &MassProfile,
    a: &Field1d<'_>,
    charge: f64,
    w: &PotentialSpec,
    grid: &Grid,
    basis: &[Vec<f64>],
) -> Result<f64> {
    let expanded = build_expanded_coupling(m, a, charge, w, grid)?;
    let squared = build_squared_coupling(m, a, charge, w, grid)?;
    let n = expanded.dim();
    if n < 5 {
        return Err(Error::InvalidGrid("identity check needs at least 7 grid points".into()));
    }
    let mut worst = 0.0_f64;
    for f in basis {
        if f.len() != grid.len() {
            return Err(Error::InvalidArgument("test function length differs from grid".into()));
        }
        let fi = &f[1..f.len() - 1];
        let u = expanded.matvec_real(fi);
        let v = squared.matvec_real(fi);
        for k in 2..n - 2 {
            worst = worst.max((u[k] - v[k]).norm());
        }
    }
    Ok(worst)
}
