//! Grids, cumulative quadrature, finite differences and interpolation.
//!
//! Everything here works on ascending but not necessarily uniform abscissae
//! unless a function says otherwise.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to decide whether a grid is uniform.
pub const UNIFORM_GRID_RTOL: f64 = 1e-9;

/// Strictly ascending one-dimensional grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid(Vec<f64>);

impl Grid {
    /// `n` equally spaced points covering `[min, max]` inclusive.
    pub fn uniform(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::InvalidGrid(format!("bad interval [{min}, {max}]")));
        }
        let h = (max - min) / (n - 1) as f64;
        let mut pts: Vec<f64> = (0..n).map(|i| min + i as f64 * h).collect();
        pts[n - 1] = max;
        Ok(Grid(pts))
    }

    pub fn from_vec(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("need at least 2 points".into()));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "points not strictly ascending at index {}",
                    i + 1
                )));
            }
        }
        Ok(Grid(points))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0[0]
    }

    pub fn max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Spacing of a uniform grid; errors if the spacing varies.
    pub fn spacing(&self) -> Result<f64> {
        let n = self.0.len();
        let h = (self.max() - self.min()) / (n - 1) as f64;
        let mut worst = 0.0_f64;
        for w in self.0.windows(2) {
            worst = worst.max(((w[1] - w[0]) - h).abs() / h);
        }
        if worst > UNIFORM_GRID_RTOL {
            return Err(Error::NonUniformGrid { deviation: worst });
        }
        Ok(h)
    }

    /// Every other point, starting from the first. Used for Richardson pairs.
    pub fn coarsened(&self) -> Result<Self> {
        if self.0.len().is_multiple_of(2) {
            return Err(Error::InvalidGrid("coarsening needs an odd number of points".into()));
        }
        Grid::from_vec(self.0.iter().copied().step_by(2).collect())
    }
}

/// Integral of the quadratic through `(x0,f0),(x1,f1),(x2,f2)` over `[a, b]`.
fn quadratic_integral(x: [f64; 3], f: [f64; 3], a: f64, b: f64) -> f64 {
    // Newton form about x0: p(t) = f0 + c1 t + c2 t (t - h0)
    let h0 = x[1] - x[0];
    let h1 = x[2] - x[1];
    let c1 = (f[1] - f[0]) / h0;
    let c2 = ((f[2] - f[1]) / h1 - c1) / (h0 + h1);
    let prim = |t: f64| f[0] * t + c1 * t * t / 2.0 + c2 * (t * t * t / 3.0 - h0 * t * t / 2.0);
    prim(b - x[0]) - prim(a - x[0])
}

/// Integral of the cubic through four nodes over `[a, b]` (3-point Gauss).
fn cubic_integral(x: &[f64], f: &[f64], a: f64, b: f64) -> f64 {
    const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for (t, w) in NODES.iter().zip(WEIGHTS) {
        let xq = mid + half * t;
        let mut p = 0.0;
        for j in 0..4 {
            let mut l = 1.0;
            for m in 0..4 {
                if m != j {
                    l *= (xq - x[m]) / (x[j] - x[m]);
                }
            }
            p += f[j] * l;
        }
        acc += w * p;
    }
    acc * half
}

/// Cumulative integral `F(x_i) = ∫_{x_0}^{x_i} f dx` by composite Simpson.
///
/// Even nodes get plain composite Simpson. Odd nodes are filled with the
/// cubic through the surrounding four nodes (quadratic when only three
/// exist), and a trailing odd interval is closed the same way.
pub fn cumulative_simpson(x: &[f64], f: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), f.len(), "abscissae and ordinates differ in length");
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * (f[0] + f[1]) * (x[1] - x[0]);
        return out;
    }
    let mut i = 0;
    while i + 2 < n {
        let xs = [x[i], x[i + 1], x[i + 2]];
        let fs = [f[i], f[i + 1], f[i + 2]];
        out[i + 1] = out[i]
            + if n >= 4 {
                let s = i.min(n - 4);
                cubic_integral(&x[s..s + 4], &f[s..s + 4], x[i], x[i + 1])
            } else {
                quadratic_integral(xs, fs, xs[0], xs[1])
            };
        out[i + 2] = out[i] + quadratic_integral(xs, fs, xs[0], xs[2]);
        i += 2;
    }
    if i + 1 < n {
        out[n - 1] = out[n - 2] + cubic_integral(&x[n - 4..], &f[n - 4..], x[n - 2], x[n - 1]);
    }
    out
}

/// Total integral over the grid (last entry of [`cumulative_simpson`]).
pub fn simpson(x: &[f64], f: &[f64]) -> f64 {
    *cumulative_simpson(x, f).last().unwrap_or(&0.0)
}

/// Second-order first derivative of tabulated data, one-sided at the ends.
pub fn centered_derivative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 3, "need at least three points");
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        d[i] = -h1 / (h0 * (h0 + h1)) * f[i - 1] + (h1 - h0) / (h0 * h1) * f[i] + h0 / (h1 * (h0 + h1)) * f[i + 1];
    }
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * f[0] + (h0 + h1) / (h0 * h1) * f[1] - h0 / (h1 * (h0 + h1)) * f[2];
    let (h0, h1) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    d[n - 1] = h1 / (h0 * (h0 + h1)) * f[n - 3] - (h0 + h1) / (h0 * h1) * f[n - 2]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * f[n - 1];
    d
}

/// Index `k` of the interval `[x_k, x_{k+1}]` containing `xq`, or an
/// extrapolation error.
fn locate(x: &[f64], xq: f64) -> Result<usize> {
    let n = x.len();
    let (lo, hi) = (x[0], x[n - 1]);
    // Allow a few ulps of slack at the ends.
    let slack = 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
    if !(xq >= lo - slack && xq <= hi + slack) {
        return Err(Error::Extrapolation {
            lo,
            hi,
            clip_lo: xq.min(lo),
            clip_hi: xq.max(hi),
        });
    }
    let k = x.partition_point(|&v| v <= xq);
    Ok(k.saturating_sub(1).min(n - 2))
}

/// Local four-point Lagrange interpolation (O(h⁴) on smooth data).
pub fn lagrange4<T>(x: &[f64], y: &[T], xq: f64) -> Result<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = x.len();
    assert_eq!(n, y.len());
    assert!(n >= 4, "lagrange4 needs at least four nodes");
    let k = locate(x, xq)?;
    let start = k.saturating_sub(1).min(n - 4);
    let xs = &x[start..start + 4];
    let mut acc: Option<T> = None;
    for j in 0..4 {
        let mut w = 1.0;
        for m in 0..4 {
            if m != j {
                w *= (xq - xs[m]) / (xs[j] - xs[m]);
            }
        }
        let term = y[start + j] * w;
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    Ok(acc.expect("four terms"))
}

/// Piecewise cubic Hermite interpolant through values and slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicHermite {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl CubicHermite {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && y.len() == dy.len());
        CubicHermite { x, y, dy }
    }

    /// Hermite interpolant whose slopes are limited (Fritsch–Carlson) so
    /// that monotone data produce a monotone interpolant.
    pub fn monotone(x: Vec<f64>, y: Vec<f64>, mut dy: Vec<f64>) -> Self {
        let n = x.len();
        for k in 0..n - 1 {
            let delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
            if delta == 0.0 {
                dy[k] = 0.0;
                dy[k + 1] = 0.0;
                continue;
            }
            let a = dy[k] / delta;
            let b = dy[k + 1] / delta;
            if a < 0.0 {
                dy[k] = 0.0;
            }
            if b < 0.0 {
                dy[k + 1] = 0.0;
            }
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                dy[k] = tau * a * delta;
                dy[k + 1] = tau * b * delta;
            }
        }
        CubicHermite::new(x, y, dy)
    }

    /// PCHIP: monotone interpolant with slopes estimated from the data.
    pub fn pchip(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut dy = vec![0.0; n];
        if n == 2 {
            let d = (y[1] - y[0]) / (x[1] - x[0]);
            return CubicHermite::new(x, y, vec![d, d]);
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        for k in 1..n - 1 {
            if del[k - 1] * del[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                dy[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
            }
        }
        let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if d * d0 <= 0.0 {
                0.0
            } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                d
            }
        };
        dy[0] = end(h[0], h[1], del[0], del[1]);
        dy[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        CubicHermite::new(x, y, dy)
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.dy
    }

    fn segment(&self, xq: f64) -> Result<(usize, f64, f64)> {
        let k = locate(&self.x, xq)?;
        let h = self.x[k + 1] - self.x[k];
        Ok((k, (xq - self.x[k]) / h, h))
    }

    pub fn eval(&self, xq: f64) -> Result<f64> {
        let (k, t, h) = self.segment(xq)?;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.y[k] + h10 * h * self.dy[k] + h01 * self.y[k + 1] + h11 * h * self.dy[k + 1])
    }

    pub fn eval_derivative(&self, xq: f64) -> Result<f64> {
        let (k, t, h) = self.segment(xq)?;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        Ok((d00 * self.y[k] + d01 * self.y[k + 1]) / h + d10 * self.dy[k] + d11 * self.dy[k + 1])
    }
}

/// Fitted slope of `log(err)` against `log(h)` from two measurements.
pub fn observed_order(h_coarse: f64, err_coarse: f64, h_fine: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).ln() / (h_coarse / h_fine).ln()
}
