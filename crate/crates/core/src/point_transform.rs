//! Point canonical transformation `q(x) = ∫ √m dx`, the wavefunction map
//! `ψ(q) = m^(−1/4) φ(x)`, and the radial map `q = (S/√m) x` used with
//! generating pairs.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mass_models::{MassProfile, ScalarMultiplier};
use crate::numerics::{cumulative_simpson, lagrange4, simpson, CubicHermite, Grid};

/// Exponent of `m` in the wavefunction map `ψ(q) = m^υ φ(x)`.
pub const UPSILON: f64 = -0.25;

/// Tabulated map `x ↦ q(x)` with its inverse.
#[derive(Debug, Clone)]
pub struct TransformMap {
    x_grid: Grid,
    q_of_x: Vec<f64>,
    jac: Vec<f64>,
    forward: CubicHermite,
    inverse: CubicHermite,
}

impl TransformMap {
    fn from_parts(x_grid: Grid, q_of_x: Vec<f64>, jac: Vec<f64>) -> Result<Self> {
        for (i, w) in q_of_x.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::domain("q(x) is not strictly increasing", x_grid.points()[i + 1]));
            }
        }
        let x = x_grid.points().to_vec();
        let forward = CubicHermite::new(x.clone(), q_of_x.clone(), jac.clone());
        let inv_slopes = jac.iter().map(|j| 1.0 / j).collect();
        let inverse = CubicHermite::monotone(q_of_x.clone(), x, inv_slopes);
        Ok(TransformMap {
            x_grid,
            q_of_x,
            jac,
            forward,
            inverse,
        })
    }

    pub fn x_grid(&self) -> &Grid {
        &self.x_grid
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q_of_x
    }

    /// `dq/dx = √m` at the nodes.
    pub fn jacobian(&self) -> &[f64] {
        &self.jac
    }

    pub fn upsilon(&self) -> f64 {
        UPSILON
    }

    /// The q nodes as a grid.
    pub fn q_grid(&self) -> Grid {
        Grid::from_vec(self.q_of_x.clone()).expect("q is strictly increasing")
    }

    pub fn q_range(&self) -> (f64, f64) {
        (self.q_of_x[0], self.q_of_x[self.q_of_x.len() - 1])
    }

    /// `q(x)` between nodes by cubic Hermite with exact slopes.
    pub fn q_at(&self, x: f64) -> Result<f64> {
        self.forward.eval(x)
    }

    /// `x(q)` by monotone cubic Hermite.
    pub fn x_at(&self, q: f64) -> Result<f64> {
        self.inverse.eval(q)
    }

    /// Shifts `q` so that `q(x_ref) = 0`.
    pub fn reanchored(&self, x_ref: f64) -> Result<Self> {
        let shift = self.q_at(x_ref)?;
        let q = self.q_of_x.iter().map(|v| v - shift).collect();
        TransformMap::from_parts(self.x_grid.clone(), q, self.jac.clone())
    }

    /// `V(q(x_i))` on the x nodes.
    pub fn pull_potential(&self, v: impl Fn(f64) -> f64) -> Vec<f64> {
        self.q_of_x.iter().map(|&q| v(q)).collect()
    }

    /// CSV with columns `x,q,jac`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "q", "jac"])?;
        for ((x, q), j) in self.x_grid.points().iter().zip(&self.q_of_x).zip(&self.jac) {
            wr.write_record([fmt(*x), fmt(*q), fmt(*j)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Builds `q(x) = ∫_{x_min}^{x} √m dx` (anchored at `q(x_min) = 0`).
pub fn build_map(m: &MassProfile, x_grid: &Grid) -> Result<TransformMap> {
    if x_grid.len() < 3 {
        return Err(Error::InvalidGrid("transform map needs at least 3 points".into()));
    }
    let x = x_grid.points();
    let mut jac = Vec::with_capacity(x.len());
    for &xi in x {
        jac.push(m.checked_value(xi)?.sqrt());
    }
    let q = cumulative_simpson(x, &jac);
    TransformMap::from_parts(x_grid.clone(), q, jac)
}

/// Which measure a wavefunction is normalized under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Dx,
    Dq,
}

/// Complex samples on an ascending grid, tagged with their coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedWavefunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub measure: Measure,
}

#[derive(Serialize)]
struct WavefunctionJson<'a> {
    measure: Measure,
    grid: &'a [f64],
    re: Vec<f64>,
    im: Vec<f64>,
}

impl GriddedWavefunction {
    pub fn new(grid: Grid, values: Vec<Complex64>, measure: Measure) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        Ok(GriddedWavefunction { grid, values, measure })
    }

    pub fn from_real(grid: Grid, values: &[f64], measure: Measure) -> Result<Self> {
        GriddedWavefunction::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect(), measure)
    }

    pub fn sample(grid: Grid, measure: Measure, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        GriddedWavefunction { grid, values, measure }
    }

    /// `∫|ψ|²` over the grid under its own measure.
    pub fn norm_squared(&self) -> f64 {
        let dens: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        simpson(self.grid.points(), &dens)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_squared();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Singular(format!(
                "cannot normalize a wavefunction with norm² {n}"
            )));
        }
        let s = 1.0 / n.sqrt();
        Ok(GriddedWavefunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            measure: self.measure,
        })
    }

    /// Value at an arbitrary point by 4-point Lagrange interpolation.
    pub fn eval(&self, at: f64) -> Result<Complex64> {
        lagrange4(self.grid.points(), &self.values, at)
    }

    /// CSV with columns `grid,re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let head = match self.measure {
            Measure::Dx => "x",
            Measure::Dq => "q",
        };
        wr.write_record([head, "re", "im"])?;
        for (g, v) in self.grid.points().iter().zip(&self.values) {
            wr.write_record([fmt(*g), fmt(v.re), fmt(v.im)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(WavefunctionJson {
            measure: self.measure,
            grid: self.grid.points(),
            re: self.values.iter().map(|v| v.re).collect(),
            im: self.values.iter().map(|v| v.im).collect(),
        })?)
    }
}

fn same_nodes(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= 1e-12 * (1.0 + u.abs()))
}

/// `φ(x) = m(x)^(1/4) ψ(q(x))` on the map's x nodes.
pub fn push_wavefunction(
    psi: &GriddedWavefunction,
    map: &TransformMap,
    m: &MassProfile,
) -> Result<GriddedWavefunction> {
    if psi.measure != Measure::Dq {
        return Err(Error::InvalidArgument("push expects a q-space wavefunction".into()));
    }
    let direct = same_nodes(psi.grid.points(), map.q_values());
    let mut values = Vec::with_capacity(map.q_values().len());
    for (i, (&x, &q)) in map.x_grid.points().iter().zip(map.q_values()).enumerate() {
        let psi_q = if direct { psi.values[i] } else { psi.eval(q)? };
        values.push(psi_q * m.checked_value(x)?.powf(-UPSILON));
    }
    GriddedWavefunction::new(map.x_grid.clone(), values, Measure::Dx)
}

/// `ψ(q_i) = m(x_i)^(−1/4) φ(x_i)` on the map's own (non-uniform) q nodes.
pub fn pull_wavefunction(
    phi: &GriddedWavefunction,
    map: &TransformMap,
    m: &MassProfile,
) -> Result<GriddedWavefunction> {
    pull_wavefunction_onto(phi, map, m, &map.q_grid())
}

/// `ψ(q) = m(x(q))^(−1/4) φ(x(q))` on an arbitrary q grid inside the map's range.
pub fn pull_wavefunction_onto(
    phi: &GriddedWavefunction,
    map: &TransformMap,
    m: &MassProfile,
    q_grid: &Grid,
) -> Result<GriddedWavefunction> {
    if phi.measure != Measure::Dx {
        return Err(Error::InvalidArgument("pull expects an x-space wavefunction".into()));
    }
    let direct = same_nodes(phi.grid.points(), map.x_grid.points()) && same_nodes(q_grid.points(), map.q_values());
    let mut values = Vec::with_capacity(q_grid.len());
    for (i, &q) in q_grid.points().iter().enumerate() {
        let (x, phi_x) = if direct {
            (map.x_grid.points()[i], phi.values[i])
        } else {
            let x = map.x_at(q)?;
            (x, phi.eval(x)?)
        };
        values.push(phi_x * m.checked_value(x)?.powf(UPSILON));
    }
    GriddedWavefunction::new(q_grid.clone(), values, Measure::Dq)
}

/// `q = (S(r)/√m(r)) x` for a point of any dimension.
pub fn radial_map_point(s: &ScalarMultiplier, m: &MassProfile, x: &[f64]) -> Result<Vec<f64>> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s.is_singular_at(r) {
        return Err(Error::domain("scalar multiplier is singular here", r));
    }
    if r == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    let factor = s.value(r) / m.checked_value(r)?.sqrt();
    if !factor.is_finite() {
        return Err(Error::domain("S(r)/√m(r) is not finite", r));
    }
    Ok(x.iter().map(|v| factor * v).collect())
}

pub fn radial_map(s: &ScalarMultiplier, m: &MassProfile, points: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    points
        .iter()
        .map(|p| radial_map_point(s, m, p).map(|q| [q[0], q[1], q[2]]))
        .collect()
}

/// Finite-difference step used by [`jacobian_trace_residual`] by default.
pub const DEFAULT_TRACE_STEP: f64 = 1e-4;

/// `max_r |Σ_j ∂q_j/∂x_j − N √m(r)|` with the divergence taken by
/// fourth-order central differences at `x = r (1,…,1)/√N`.
pub fn jacobian_trace_residual(
    s: &ScalarMultiplier,
    m: &MassProfile,
    dof: u32,
    r_grid: &Grid,
    step: f64,
) -> Result<f64> {
    let n = dof as usize;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let dir = 1.0 / (n as f64).sqrt();
    let mut worst = 0.0_f64;
    for &r in r_grid.points() {
        let base: Vec<f64> = vec![r * dir; n];
        let mut div = 0.0;
        for j in 0..n {
            let qj = |offset: f64| -> Result<f64> {
                let mut p = base.clone();
                p[j] += offset;
                Ok(radial_map_point(s, m, &p)?[j])
            };
            let d = (-qj(2.0 * step)? + 8.0 * qj(step)? - 8.0 * qj(-step)? + qj(-2.0 * step)?) / (12.0 * step);
            div += d;
        }
        let res = (div - dof as f64 * m.checked_value(r)?.sqrt()).abs();
        worst = worst.max(res);
    }
    Ok(worst)
}
