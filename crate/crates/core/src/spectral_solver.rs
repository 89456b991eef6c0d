//! Bound-state spectra of the discretized operators, the q-space versus
//! x-space isospectrality check, and ordering sweeps.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mass_models::MassProfile;
use crate::numerics::Grid;
use crate::operators::{
    build_reduced_pdm, build_von_roos, symmetrize, DiscretizedOperator, OrderingParams, PotentialSpec,
};
use crate::point_transform::{build_map, GriddedWavefunction, Measure};
use crate::tridiag::SymmetricTridiagonal;

/// Relative symmetry defect accepted by [`solve_symmetric`].
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// Residual bound relative to `‖H‖`.
pub const RESIDUAL_RTOL: f64 = 1e-10;

/// Default relative tolerance for spectral comparisons on 4001-point grids.
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n_points: usize,
    pub spacing: f64,
    pub domain: (f64, f64),
}

impl GridMeta {
    fn of(grid: &Grid) -> Self {
        GridMeta {
            n_points: grid.len(),
            spacing: grid.spacing().unwrap_or(f64::NAN),
            domain: (grid.min(), grid.max()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// Full-grid eigenvectors (zero at the walls), unit norm under `dx`.
    pub eigenvectors: Option<Vec<GriddedWavefunction>>,
    /// `‖Hv − Ev‖_max` for unit 2-norm `v`.
    pub residuals: Vec<f64>,
    pub grid_meta: GridMeta,
    /// `‖H‖_∞`, the scale of the residual bound.
    pub operator_norm: f64,
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    ordering: &'a str,
    eigenvalues: &'a [f64],
    residuals: &'a [f64],
}

impl SpectrumResult {
    pub fn to_json(&self, label: &str) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(SpectrumJson {
            ordering: label,
            eigenvalues: &self.eigenvalues,
            residuals: &self.residuals,
        })?)
    }

    /// CSV with columns `n,eigenvalue,residual`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "eigenvalue", "residual"])?;
        for (i, (e, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            wr.write_record([i.to_string(), format!("{e:.16e}"), format!("{r:.16e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn tridiagonal_of(op: &DiscretizedOperator) -> Result<SymmetricTridiagonal> {
    let a = &op.matrix;
    if a.occupied_half_bandwidth() > 1 {
        return Err(Error::NotSymmetric("operator is not tridiagonal".into()));
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    if a.max_imag() > SYMMETRY_RTOL * scale {
        return Err(Error::NotSymmetric("operator has imaginary entries".into()));
    }
    let defect = a.hermiticity_defect();
    if defect > SYMMETRY_RTOL * scale {
        return Err(Error::NotSymmetric(format!("symmetry defect {defect:e}")));
    }
    let (lower, diag, upper) = a.real_tridiagonal();
    let off = lower.iter().zip(&upper).map(|(l, u)| 0.5 * (l + u)).collect();
    SymmetricTridiagonal::new(diag, off)
}

/// The `k` lowest eigenpairs of a real symmetric tridiagonal operator.
pub fn solve_symmetric(op: &DiscretizedOperator, k: usize, with_vectors: bool) -> Result<SpectrumResult> {
    let grid_meta = GridMeta::of(&op.grid);
    let t = tridiagonal_of(op)?;
    if k > t.dim() {
        return Err(Error::TooManyEigenpairs {
            requested: k,
            dimension: t.dim(),
        });
    }
    let norm = t.norm();
    let eigenvalues = t.lowest_eigenvalues(k)?;
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (i, &e) in eigenvalues.iter().enumerate() {
        // Only vectors of nearby eigenvalues need explicit orthogonalization.
        let near: Vec<Vec<f64>> = raw
            .iter()
            .zip(&eigenvalues)
            .filter(|(_, &f)| (e - f).abs() <= 1e-8 * norm)
            .map(|(v, _)| v.clone())
            .collect();
        let v = t.eigenvector(e, &near, i)?;
        let tv = t.matvec(&v);
        residuals.push(tv.iter().zip(&v).map(|(a, b)| (a - e * b).abs()).fold(0.0, f64::max));
        raw.push(v);
    }
    let eigenvectors = with_vectors.then(|| raw.iter().map(|v| to_wavefunction(&op.grid, v)).collect());
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        residuals,
        grid_meta,
        operator_norm: norm,
    })
}

/// Pads an interior vector with wall zeros, normalizes under `dx`, and fixes
/// the sign so the largest component is positive.
fn to_wavefunction(grid: &Grid, interior: &[f64]) -> GriddedWavefunction {
    let h = grid.spacing().unwrap_or(1.0);
    let mut full = Vec::with_capacity(interior.len() + 2);
    full.push(0.0);
    full.extend_from_slice(interior);
    full.push(0.0);
    let peak = full
        .iter()
        .copied()
        .fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
    let norm = (full.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
    let s = peak.signum() / norm;
    let values = full.iter().map(|v| Complex64::new(v * s, 0.0)).collect();
    GriddedWavefunction {
        grid: grid.clone(),
        values,
        measure: Measure::Dx,
    }
}

/// Eigenvalues of a general (possibly non-symmetric) operator from a dense
/// solve, sorted by real part. Meant for cross-checks on small grids.
pub fn solve_general_dense(op: &DiscretizedOperator, k: usize) -> Result<Vec<Complex64>> {
    let n = op.dim();
    if k > n {
        return Err(Error::TooManyEigenpairs {
            requested: k,
            dimension: n,
        });
    }
    let mut ev: Vec<Complex64> = if op.matrix.max_imag() == 0.0 {
        op.matrix
            .to_dense_real()
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect()
    } else {
        let dense = op.matrix.to_dense();
        dense
            .eigenvalues()
            .ok_or(Error::Convergence { index: 0 })?
            .iter()
            .copied()
            .collect()
    };
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    ev.truncate(k);
    Ok(ev)
}

/// Von Roos operator for `m` with ordering `ord`, symmetrized and solved.
/// Eigenvectors are mapped back to the unsymmetrized operator.
pub fn solve_pdm(
    m: &MassProfile,
    v: &PotentialSpec,
    ord: OrderingParams,
    grid: &Grid,
    k: usize,
    with_vectors: bool,
) -> Result<SpectrumResult> {
    let op = build_von_roos(m, v, ord, grid)?;
    let sym = symmetrize(&op)?;
    let mut res = solve_symmetric(&sym.operator, k, with_vectors)?;
    if let Some(vecs) = res.eigenvectors.as_mut() {
        for wf in vecs.iter_mut() {
            let interior: Vec<f64> = wf.values[1..wf.values.len() - 1].iter().map(|c| c.re).collect();
            *wf = to_wavefunction(grid, &sym.unscale(&interior));
        }
    }
    Ok(res)
}

/// A potential in the q coordinate.
pub type PotentialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Knobs shared by [`isospectrality_check`] and [`ordering_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Point where `q = 0`; `None` anchors at the left end of the domain.
    pub anchor_x: Option<f64>,
    /// Combine the grid with its every-other-point coarsening,
    /// `E = (4E_h − E_2h)/3`. Needs an odd number of points.
    pub richardson: bool,
    /// Refuse levels above the potential at the nearer wall (the wall
    /// would then be doing the confining).
    pub require_confinement: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            anchor_x: Some(0.0),
            richardson: false,
            require_confinement: true,
        }
    }
}

struct Prepared {
    x_grid: Grid,
    q_grid: Grid,
    v_x: PotentialSpec,
    v_q: PotentialSpec,
}

fn prepare(
    m: &MassProfile,
    v_q: &PotentialFn,
    x_domain: (f64, f64),
    n_points: usize,
    opts: &SpectralOptions,
) -> Result<Prepared> {
    let x_grid = Grid::uniform(x_domain.0, x_domain.1, n_points)?;
    let mut map = build_map(m, &x_grid)?;
    if let Some(a) = opts.anchor_x {
        if a >= x_domain.0 && a <= x_domain.1 {
            map = map.reanchored(a)?;
        }
    }
    let (q_lo, q_hi) = map.q_range();
    let q_grid = Grid::uniform(q_lo, q_hi, n_points)?;
    let vf = v_q.clone();
    let v_x = PotentialSpec::through_map(&map, move |q| vf(q));
    let vf = v_q.clone();
    let v_q_spec = PotentialSpec::new(move |q| vf(q));
    Ok(Prepared {
        x_grid,
        q_grid,
        v_x,
        v_q: v_q_spec,
    })
}

fn check_confined(eigenvalues: &[f64], v_q: &PotentialFn, q_grid: &Grid) -> Result<()> {
    let wall = v_q(q_grid.min()).min(v_q(q_grid.max()));
    if let Some(&top) = eigenvalues.last() {
        if top >= wall {
            return Err(Error::Unconfined {
                k: eigenvalues.len(),
                advice: format!(
                    "level {top:.6} reaches the wall potential {wall:.6} on q ∈ [{:.4}, {:.4}]; enlarge the x domain",
                    q_grid.min(),
                    q_grid.max()
                ),
            });
        }
    }
    Ok(())
}

fn richardson(fine: &[f64], coarse: &[f64]) -> Vec<f64> {
    fine.iter().zip(coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
}

fn coarse_grid(g: &Grid) -> Result<Grid> {
    g.coarsened()
}

fn reference_spectrum(p: &Prepared, k: usize, opts: &SpectralOptions) -> Result<Vec<f64>> {
    let op = build_reduced_pdm(&MassProfile::unit(), &p.v_q, &p.q_grid)?;
    let fine = solve_symmetric(&op, k, false)?.eigenvalues;
    if !opts.richardson {
        return Ok(fine);
    }
    let op = build_reduced_pdm(&MassProfile::unit(), &p.v_q, &coarse_grid(&p.q_grid)?)?;
    Ok(richardson(&fine, &solve_symmetric(&op, k, false)?.eigenvalues))
}

fn x_spectrum(
    m: &MassProfile,
    p: &Prepared,
    ord: OrderingParams,
    k: usize,
    opts: &SpectralOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let fine = solve_pdm(m, &p.v_x, ord, &p.x_grid, k, false)?;
    if !opts.richardson {
        return Ok((fine.eigenvalues, fine.residuals));
    }
    let coarse = solve_pdm(m, &p.v_x, ord, &coarse_grid(&p.x_grid)?, k, false)?;
    Ok((richardson(&fine.eigenvalues, &coarse.eigenvalues), fine.residuals))
}

fn rel_diffs(a: &[f64], reference: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(reference)
        .map(|(x, r)| (x - r).abs() / r.abs().max(f64::MIN_POSITIVE))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsospectralityReport {
    pub n_points: usize,
    pub x_domain: (f64, f64),
    pub q_domain: (f64, f64),
    pub e_q: Vec<f64>,
    pub e_x: Vec<f64>,
    pub rel_diff: Vec<f64>,
    pub max_rel_diff: f64,
    pub tol: f64,
    pub passed: bool,
    pub richardson: bool,
}

/// Solves `−∂_q² + V(q)` on a uniform grid over the q-image of `x_domain`
/// and the symmetrized reduced PDM operator with `V(q(x))` on the x grid,
/// then compares the `k` lowest levels.
pub fn isospectrality_check(
    m: &MassProfile,
    v_q: &PotentialFn,
    x_domain: (f64, f64),
    n_points: usize,
    k: usize,
    tol: f64,
    opts: &SpectralOptions,
) -> Result<IsospectralityReport> {
    let p = prepare(m, v_q, x_domain, n_points, opts)?;
    let e_q = reference_spectrum(&p, k, opts)?;
    if opts.require_confinement {
        check_confined(&e_q, v_q, &p.q_grid)?;
    }
    let (e_x, _) = x_spectrum(m, &p, OrderingParams::mm_ordering(), k, opts)?;
    let rel_diff = rel_diffs(&e_x, &e_q);
    let max_rel_diff = rel_diff.iter().copied().fold(0.0, f64::max);
    Ok(IsospectralityReport {
        n_points,
        x_domain,
        q_domain: (p.q_grid.min(), p.q_grid.max()),
        e_q,
        e_x,
        rel_diff,
        max_rel_diff,
        tol,
        passed: max_rel_diff <= tol,
        richardson: opts.richardson,
    })
}

/// A named ordering for sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedOrdering {
    pub label: String,
    pub ordering: OrderingParams,
}

impl NamedOrdering {
    pub fn new(label: impl Into<String>, ordering: OrderingParams) -> Self {
        NamedOrdering {
            label: label.into(),
            ordering,
        }
    }

    /// MM, BenDaniel–Duke, Gora–Williams `(−1,0,0)`, Zhu–Kroemer `(−1/2,0,−1/2)`.
    pub fn standard_set() -> Vec<NamedOrdering> {
        vec![
            NamedOrdering::new("mm", OrderingParams::mm_ordering()),
            NamedOrdering::new("bendaniel-duke", OrderingParams::bendaniel_duke()),
            NamedOrdering::new("gora-williams", OrderingParams::from_alpha_beta(-1.0, 0.0)),
            NamedOrdering::new("zhu-kroemer", OrderingParams::from_alpha_beta(-0.5, 0.0)),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub ordering: OrderingParams,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rel_dev: Vec<f64>,
    pub max_rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingSweepReport {
    pub reference: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

impl OrderingSweepReport {
    pub fn row(&self, label: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// x-space spectra for each ordering, judged against the q-space reference.
pub fn ordering_sweep(
    m: &MassProfile,
    v_q: &PotentialFn,
    orderings: &[NamedOrdering],
    x_domain: (f64, f64),
    n_points: usize,
    k: usize,
    opts: &SpectralOptions,
) -> Result<OrderingSweepReport> {
    let p = prepare(m, v_q, x_domain, n_points, opts)?;
    let reference = reference_spectrum(&p, k, opts)?;
    if opts.require_confinement {
        check_confined(&reference, v_q, &p.q_grid)?;
    }
    let rows = orderings
        .iter()
        .map(|o| {
            let (eigenvalues, residuals) = x_spectrum(m, &p, o.ordering, k, opts)?;
            let rel_dev = rel_diffs(&eigenvalues, &reference);
            let max_rel_dev = rel_dev.iter().copied().fold(0.0, f64::max);
            Ok(SweepRow {
                label: o.label.clone(),
                ordering: o.ordering,
                eigenvalues,
                residuals,
                rel_dev,
                max_rel_dev,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderingSweepReport { reference, rows })
}
