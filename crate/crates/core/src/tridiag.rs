//! Symmetric tridiagonal eigensolver: bisection on Sturm counts for the
//! eigenvalues, inverse iteration for the eigenvectors.

use crate::error::{Error, Result};

const MAX_BISECTION: usize = 200;
const MAX_INVERSE_ITER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(format!(
                "tridiagonal needs n diagonal and n-1 off-diagonal entries, got {} and {}",
                diag.len(),
                off.len()
            )));
        }
        Ok(SymmetricTridiagonal { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Infinity norm.
    pub fn norm(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    /// Interval containing every eigenvalue.
    #[must_use]
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - l - r);
            hi = hi.max(self.diag[i] + l + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (negative pivots of
    /// `T − xI = LDLᵀ`).
    #[must_use]
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.dim() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.dim() {
            return Err(Error::TooManyEigenpairs {
                requested: index + 1,
                dimension: self.dim(),
            });
        }
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..MAX_BISECTION {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            Ok(0.5 * (lo + hi))
        } else {
            Err(Error::Convergence { index })
        }
    }

    /// The `k` smallest eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.dim() {
            return Err(Error::TooManyEigenpairs {
                requested: k,
                dimension: self.dim(),
            });
        }
        (0..k).map(|i| self.eigenvalue(i)).collect()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `(T − σI) x = b` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let tiny = f64::EPSILON * self.norm().max(f64::MIN_POSITIVE);
        // Row i holds (d, u1, u2) after elimination; u2 fills in from pivoting.
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - sigma).collect();
        let mut u1: Vec<f64> = self.off.clone();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut l = self.off.clone();
        let mut rhs = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= l[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = l[i] / d[i];
                d[i + 1] -= f * u1[i];
                rhs[i + 1] -= f * rhs[i];
                l[i] = f;
            } else {
                // Swap rows i and i+1.
                let f = d[i] / l[i];
                d[i] = l[i];
                let t = d[i + 1];
                d[i + 1] = u1[i] - f * t;
                u1[i] = t;
                u2[i] = u1[i + 1];
                u1[i + 1] = -f * u2[i];
                rhs.swap(i, i + 1);
                rhs[i + 1] -= f * rhs[i];
                l[i] = f;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / d[i];
        }
        x
    }

    /// Unit-norm eigenvector for the eigenvalue `lambda` by inverse
    /// iteration, kept orthogonal to `previous` (needed for clusters).
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>], index: usize) -> Result<Vec<f64>> {
        let n = self.dim();
        let norm = self.norm().max(f64::MIN_POSITIVE);
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + ((i * 7919 + index * 104_729) % 1000) as f64 * 1e-3)
            .collect();
        normalize(&mut v);
        let target = 1e-12 * norm;
        let mut best = f64::INFINITY;
        for _ in 0..MAX_INVERSE_ITER {
            let mut w = self.shifted_solve(lambda, &v);
            for p in previous {
                let c: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(p).for_each(|(x, y)| *x -= c * y);
            }
            if !normalize(&mut w) {
                return Err(Error::Convergence { index });
            }
            v = w;
            let tv = self.matvec(&v);
            best = tv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).abs())
                .fold(0.0, f64::max);
            if best <= target {
                break;
            }
        }
        if best <= 1e-10 * norm {
            Ok(v)
        } else {
            Err(Error::Convergence { index })
        }
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(s > 0.0) || !s.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= s);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_count_identity_2x2() {
        let t = SymmetricTridiagonal::new(vec![1.0, 1.0], vec![0.0]).unwrap();
        assert_eq!(t.sturm_count(0.5), 0);
        assert_eq!(t.sturm_count(1.5), 2);
    }

    #[test]
    fn discrete_laplacian_eigenvalues() {
        // 2 − 2cos(kπ/(n+1))
        let n = 50;
        let t = SymmetricTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let ev = t.lowest_eigenvalues(n).unwrap();
        for (k, e) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((e - exact).abs() < 1e-14, "k = {k}");
        }
        assert!(matches!(
            t.lowest_eigenvalues(n + 1),
            Err(Error::TooManyEigenpairs { .. })
        ));
    }

    #[test]
    fn eigenvectors_orthonormal_and_accurate() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin() + 2.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + 0.1 * (i as f64).cos()).collect();
        let t = SymmetricTridiagonal::new(diag.clone(), off.clone()).unwrap();
        let ev = t.lowest_eigenvalues(6).unwrap();
        let mut vecs: Vec<Vec<f64>> = Vec::new();
        for (i, &e) in ev.iter().enumerate() {
            let v = t.eigenvector(e, &vecs, i).unwrap();
            vecs.push(v);
        }
        for a in 0..6 {
            for b in 0..6 {
                let d: f64 = vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10, "({a},{b}) = {d}");
            }
        }
        let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let mut reference: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_decoupled_blocks() {
        let t = SymmetricTridiagonal::new(vec![1.0, 1.0, 3.0], vec![0.0, 0.0]).unwrap();
        let ev = t.lowest_eigenvalues(2).unwrap();
        let v0 = t.eigenvector(ev[0], &[], 0).unwrap();
        let v1 = t.eigenvector(ev[1], std::slice::from_ref(&v0), 1).unwrap();
        let d: f64 = v0.iter().zip(&v1).map(|(a, b)| a * b).sum();
        assert!(d.abs() < 1e-12);
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }
}
