//! Finite-difference operators on uniform 1D grids with hard walls.
//!
//! Every matrix acts on the interior nodes `x_1 … x_{n−2}`; the wavefunction
//! is pinned to zero at `x_0` and `x_{n−1}`.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::mass_models::{MassProfile, RealFn};
use crate::numerics::Grid;
use crate::point_transform::TransformMap;

/// Tolerance on `α + β + γ + 1`.
pub const ORDERING_TOL: f64 = 1e-12;

/// von Roos ordering parameters `(α, β, γ)` with `α + β + γ = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl OrderingParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let sum = alpha + beta + gamma;
        if !sum.is_finite() || (sum + 1.0).abs() > ORDERING_TOL {
            return Err(Error::OrderingConstraint { sum });
        }
        Ok(OrderingParams { alpha, beta, gamma })
    }

    /// Fills in `γ = −1 − α − β`.
    pub fn from_alpha_beta(alpha: f64, beta: f64) -> Self {
        OrderingParams {
            alpha,
            beta,
            gamma: -1.0 - alpha - beta,
        }
    }

    /// `(−1/4, −1/2, −1/4)`.
    pub fn mm_ordering() -> Self {
        OrderingParams {
            alpha: -0.25,
            beta: -0.5,
            gamma: -0.25,
        }
    }

    /// `(0, −1, 0)`.
    pub fn bendaniel_duke() -> Self {
        OrderingParams {
            alpha: 0.0,
            beta: -1.0,
            gamma: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Coefficient of `m'²/m³`: `α(α+β+1) + β + 1`.
    pub fn gradient_coefficient(&self) -> f64 {
        self.alpha * (self.alpha + self.beta + 1.0) + self.beta + 1.0
    }

    /// Coefficient of `m''/m²`: `(1+β)/2`.
    pub fn curvature_coefficient(&self) -> f64 {
        0.5 * (1.0 + self.beta)
    }
}

/// `W(x) = e φ(x) + V(x)`.
#[derive(Clone)]
pub struct PotentialSpec {
    v: RealFn,
    scalar_em: Option<(f64, RealFn)>,
}

impl std::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("charge", &self.scalar_em.as_ref().map(|(e, _)| *e))
            .finish()
    }
}

impl PotentialSpec {
    pub fn new(v: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PotentialSpec {
            v: Arc::new(v),
            scalar_em: None,
        }
    }

    pub fn zero() -> Self {
        PotentialSpec::new(|_| 0.0)
    }

    /// `V(q(x))` for a potential given in the q coordinate.
    pub fn through_map(map: &TransformMap, v_of_q: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let map = map.clone();
        PotentialSpec::new(move |x| map.q_at(x).map_or(f64::NAN, &v_of_q))
    }

    /// Adds a scalar electromagnetic part `e φ(x)`.
    pub fn with_scalar_potential(mut self, charge: f64, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.scalar_em = Some((charge, Arc::new(phi)));
        self
    }

    pub fn v(&self, x: f64) -> f64 {
        (self.v)(x)
    }

    /// Combined `W(x)`.
    pub fn w(&self, x: f64) -> f64 {
        let em = self.scalar_em.as_ref().map_or(0.0, |(e, phi)| e * phi(x));
        em + self.v(x)
    }
}

/// Inner product under which an operator is self-adjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HermitianUnder {
    Dx,
    /// Weight on the interior nodes.
    Weighted(Vec<f64>),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    ThreePoint,
    FivePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
}

/// Band matrix on the interior nodes of a uniform grid.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub grid: Grid,
    pub matrix: BandedMatrix,
    pub hermitian_under: HermitianUnder,
    pub stencil: Stencil,
    pub boundary: Boundary,
}

impl DiscretizedOperator {
    fn new(grid: Grid, matrix: BandedMatrix, hermitian_under: HermitianUnder) -> Self {
        let stencil = if matrix.half_bandwidth() <= 1 {
            Stencil::ThreePoint
        } else {
            Stencil::FivePoint
        };
        DiscretizedOperator {
            grid,
            matrix,
            hermitian_under,
            stencil,
            boundary: Boundary::Dirichlet,
        }
    }

    pub fn interior(&self) -> &[f64] {
        let p = self.grid.points();
        &p[1..p.len() - 1]
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing().expect("operator grids are uniform")
    }

    /// Applies the operator to a function sampled on the interior nodes.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.matrix.matvec(f)
    }

    /// Coordinate list `i,j,re,im` of the non-zero entries.
    pub fn write_coo_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["i", "j", "re", "im"])?;
        for (i, j, v) in self.matrix.entries() {
            if v.re != 0.0 || v.im != 0.0 {
                wr.write_record([
                    i.to_string(),
                    j.to_string(),
                    format!("{:.16e}", v.re),
                    format!("{:.16e}", v.im),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Mass data on the interior nodes of a uniform grid.
pub(crate) struct InteriorMass {
    pub h: f64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub dm: Vec<f64>,
    pub ddm: Vec<f64>,
}

pub(crate) fn interior_mass(m: &MassProfile, grid: &Grid) -> Result<InteriorMass> {
    if grid.len() < 4 {
        return Err(Error::InvalidGrid("operators need at least 4 grid points".into()));
    }
    let h = grid.spacing()?;
    m.check_positive(grid.points())?;
    let p = grid.points();
    let x = p[1..p.len() - 1].to_vec();
    Ok(InteriorMass {
        h,
        m: x.iter().map(|&t| m.value(t)).collect(),
        dm: x.iter().map(|&t| m.derivative(t)).collect(),
        ddm: x.iter().map(|&t| m.second_derivative(t)).collect(),
        x,
    })
}

/// Skew-symmetric central difference `(f_{i+1} − f_{i−1}) / 2h`.
pub fn central_difference(n: usize, h: f64) -> BandedMatrix {
    let mut d = BandedMatrix::zeros(n, 1);
    let c = Complex64::new(0.5 / h, 0.0);
    for i in 0..n.saturating_sub(1) {
        d.set(i, i + 1, c);
        d.set(i + 1, i, -c);
    }
    d
}

/// `−(1/m)∂² + (m'/m²)∂ − [α(α+β+1)+β+1] m'²/m³ + ½(1+β) m''/m² + W`
/// with three-point central differences.
pub fn build_von_roos(
    m: &MassProfile,
    v: &PotentialSpec,
    ord: OrderingParams,
    grid: &Grid,
) -> Result<DiscretizedOperator> {
    let im = interior_mass(m, grid)?;
    let n = im.x.len();
    let h2 = im.h * im.h;
    let c1 = ord.gradient_coefficient();
    let c2 = ord.curvature_coefficient();
    let mut diag = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n - 1);
    let mut upper = Vec::with_capacity(n - 1);
    for i in 0..n {
        let (mi, d1, d2) = (im.m[i], im.dm[i], im.ddm[i]);
        let w = v.w(im.x[i]);
        if !w.is_finite() {
            return Err(Error::domain("potential is not finite", im.x[i]));
        }
        diag.push(2.0 / (mi * h2) - c1 * d1 * d1 / (mi * mi * mi) + c2 * d2 / (mi * mi) + w);
        let first = d1 / (2.0 * mi * mi * im.h);
        if i + 1 < n {
            upper.push(-1.0 / (mi * h2) + first);
        }
        if i > 0 {
            lower.push(-1.0 / (mi * h2) - first);
        }
    }
    let herm = if m.is_constant() {
        HermitianUnder::Dx
    } else {
        HermitianUnder::None
    };
    Ok(DiscretizedOperator::new(
        grid.clone(),
        BandedMatrix::from_real_tridiagonal(&lower, &diag, &upper),
        herm,
    ))
}

/// The fixed-ordering equation with coefficients 7/16 and 1/4.
pub fn build_reduced_pdm(m: &MassProfile, v: &PotentialSpec, grid: &Grid) -> Result<DiscretizedOperator> {
    build_von_roos(m, v, OrderingParams::mm_ordering(), grid)
}

/// A symmetric tridiagonal operator `S = D⁻¹ A D` and the diagonal `D`.
#[derive(Debug, Clone)]
pub struct Symmetrized {
    pub operator: DiscretizedOperator,
    /// Diagonal of `D`; an eigenvector `u` of `S` gives `D u` for `A`.
    pub scaling: Vec<f64>,
}

impl Symmetrized {
    /// Maps an eigenvector of the symmetric operator back to the original.
    pub fn unscale(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.scaling).map(|(a, d)| a * d).collect()
    }
}

/// Diagonal similarity that makes a real tridiagonal operator symmetric.
/// Needs every product of mirrored off-diagonals to be positive.
pub fn symmetrize(op: &DiscretizedOperator) -> Result<Symmetrized> {
    if op.matrix.occupied_half_bandwidth() > 1 || op.matrix.max_imag() != 0.0 {
        return Err(Error::NotSymmetric(
            "symmetrize expects a real tridiagonal operator".into(),
        ));
    }
    let (lower, diag, upper) = op.matrix.real_tridiagonal();
    let n = diag.len();
    let mut scaling = vec![1.0; n];
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        let prod = lower[i] * upper[i];
        if !(prod > 0.0) {
            return Err(Error::NotSymmetric(format!(
                "off-diagonal product {prod:e} at row {i} is not positive; refine the grid"
            )));
        }
        scaling[i + 1] = scaling[i] * (lower[i] / upper[i]).sqrt();
        off.push(upper[i].signum() * prod.sqrt());
    }
    // Keep the scaling O(1) on long grids.
    let mid = scaling[n / 2];
    scaling.iter_mut().for_each(|s| *s /= mid);
    Ok(Symmetrized {
        operator: DiscretizedOperator::new(
            op.grid.clone(),
            BandedMatrix::from_real_tridiagonal(&off, &diag, &off),
            HermitianUnder::Dx,
        ),
        scaling,
    })
}

/// `π̂ = −(i/2)(a∂ + ∂a)` with `a = m^(−1/2)`, which equals
/// `−(i/√m)[∂ − m'/4m]` and is exactly Hermitian on the grid.
pub fn build_pseudo_momentum(m: &MassProfile, grid: &Grid) -> Result<DiscretizedOperator> {
    let im = interior_mass(m, grid)?;
    let a: Vec<f64> = im.m.iter().map(|v| 1.0 / v.sqrt()).collect();
    let n = a.len();
    let mut p = BandedMatrix::zeros(n, 1);
    for i in 0..n - 1 {
        let v = Complex64::new(0.0, -(a[i] + a[i + 1]) / (4.0 * im.h));
        p.set(i, i + 1, v);
        p.set(i + 1, i, -v);
    }
    Ok(DiscretizedOperator::new(grid.clone(), p, HermitianUnder::Dx))
}

/// `P̂ = √m π̂ = −i[∂ − m'/4m]`, self-adjoint under the weight `m^(−1/2)`.
pub fn build_pdm_momentum(m: &MassProfile, grid: &Grid) -> Result<DiscretizedOperator> {
    let pi = build_pseudo_momentum(m, grid)?;
    let im = interior_mass(m, grid)?;
    let sqrt_m: Vec<f64> = im.m.iter().map(|v| v.sqrt()).collect();
    let herm = if m.is_constant() {
        HermitianUnder::Dx
    } else {
        HermitianUnder::Weighted(sqrt_m.iter().map(|s| 1.0 / s).collect())
    };
    Ok(DiscretizedOperator::new(
        grid.clone(),
        pi.matrix.scale_rows(&sqrt_m),
        herm,
    ))
}

/// Residuals of the two candidate factorized kinetic terms against the
/// reduced Hamiltonian, measured on a test basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticIdentityReport {
    /// `max |(π̂π̂ + W − H) f|`
    pub pi_squared: f64,
    /// `max |(m⁻¹ P̂P̂ + W − H) f|`
    pub p_squared_over_m: f64,
}

/// Cubic polynomials in the rescaled coordinate `t = (x − centre)/half-width`.
pub fn polynomial_test_basis(grid: &Grid) -> Vec<Vec<f64>> {
    let c = 0.5 * (grid.min() + grid.max());
    let l = 0.5 * (grid.max() - grid.min());
    (0..4)
        .map(|k| grid.points().iter().map(|&x| ((x - c) / l).powi(k)).collect())
        .collect()
}

/// Both residuals with the default polynomial test basis.
pub fn kinetic_identity_residual(m: &MassProfile, v: &PotentialSpec, grid: &Grid) -> Result<KineticIdentityReport> {
    kinetic_identity_residual_with(m, v, grid, &polynomial_test_basis(grid))
}

/// Residuals of `π̂² + W` and `m⁻¹P̂² + W` against `H` applied to each basis
/// function (sampled on the full grid). Two nodes next to each wall are
/// excluded, where the products see the Dirichlet truncation.
pub fn kinetic_identity_residual_with(
    m: &MassProfile,
    v: &PotentialSpec,
    grid: &Grid,
    basis: &[Vec<f64>],
) -> Result<KineticIdentityReport> {
    let h = build_reduced_pdm(m, v, grid)?;
    let pi = build_pseudo_momentum(m, grid)?;
    let p = build_pdm_momentum(m, grid)?;
    let im = interior_mass(m, grid)?;
    let n = im.x.len();
    if n < 5 {
        return Err(Error::InvalidGrid("identity check needs at least 7 grid points".into()));
    }
    let w: Vec<f64> = im.x.iter().map(|&x| v.w(x)).collect();
    let inv_m: Vec<f64> = im.m.iter().map(|v| 1.0 / v).collect();
    let pi2 = pi.matrix.mul(&pi.matrix).add_diagonal(&w);
    let p2m = p.matrix.mul(&p.matrix).scale_rows(&inv_m).add_diagonal(&w);
    let mut out = KineticIdentityReport {
        pi_squared: 0.0,
        p_squared_over_m: 0.0,
    };
    for f in basis {
        if f.len() != grid.len() {
            return Err(Error::InvalidArgument("test function length differs from grid".into()));
        }
        let fi = &f[1..f.len() - 1];
        // Full-stencil application of H near the walls is not needed since
        // those rows are excluded below.
        let hf = h.matrix.matvec_real(fi);
        let a = pi2.matvec_real(fi);
        let b = p2m.matvec_real(fi);
        for k in 2..n - 2 {
            out.pi_squared = out.pi_squared.max((a[k] - hf[k]).norm());
            out.p_squared_over_m = out.p_squared_over_m.max((b[k] - hf[k]).norm());
        }
    }
    Ok(out)
}
