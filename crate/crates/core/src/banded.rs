//! Square complex band matrix with equal lower and upper half-bandwidth.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    half: usize,
    data: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl BandedMatrix {
    pub fn zeros(n: usize, half: usize) -> Self {
        BandedMatrix {
            n,
            half,
            data: vec![ZERO; n * (2 * half + 1)],
        }
    }

    /// Real tridiagonal matrix; `lower[i]` is entry `(i+1, i)` and `upper[i]`
    /// is entry `(i, i+1)`.
    pub fn from_real_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        assert!(lower.len() + 1 == n.max(1) && upper.len() + 1 == n.max(1));
        let mut m = BandedMatrix::zeros(n, 1);
        for i in 0..n {
            m.set(i, i, Complex64::new(diag[i], 0.0));
            if i + 1 < n {
                m.set(i + 1, i, Complex64::new(lower[i], 0.0));
                m.set(i, i + 1, Complex64::new(upper[i], 0.0));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || i.abs_diff(j) > self.half {
            None
        } else {
            Some(i * (2 * self.half + 1) + (j + self.half - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.slot(i, j).map_or(ZERO, |k| self.data[k])
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.data[k] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.slot(i, j).expect("entry outside band");
        self.data[k] += v;
    }

    fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.half)..(i + self.half + 1).min(self.n)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn matvec_real(&self, v: &[f64]) -> Vec<Complex64> {
        let c: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.matvec(&c)
    }

    /// Matrix product; the half-bandwidths add.
    pub fn mul(&self, other: &BandedMatrix) -> BandedMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BandedMatrix::zeros(self.n, self.half + other.half);
        for i in 0..self.n {
            for k in self.row_range(i) {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in other.row_range(k) {
                    out.add_to(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    /// Copy with a wider band.
    pub fn widened(&self, half: usize) -> BandedMatrix {
        let half = half.max(self.half);
        let mut out = BandedMatrix::zeros(self.n, half);
        for (i, j, v) in self.entries() {
            out.set(i, j, v);
        }
        out
    }

    pub fn add(&self, other: &BandedMatrix) -> BandedMatrix {
        assert_eq!(self.n, other.n);
        let mut out = self.widened(other.half);
        for (i, j, v) in other.entries() {
            out.add_to(i, j, v);
        }
        out
    }

    pub fn sub(&self, other: &BandedMatrix) -> BandedMatrix {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, s: Complex64) -> BandedMatrix {
        BandedMatrix {
            n: self.n,
            half: self.half,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `diag(d) · A`.
    pub fn scale_rows(&self, d: &[f64]) -> BandedMatrix {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        let w = 2 * self.half + 1;
        for (i, row) in out.data.chunks_mut(w).enumerate() {
            row.iter_mut().for_each(|v| *v *= d[i]);
        }
        out
    }

    /// `A · diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> BandedMatrix {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            for j in self.row_range(i) {
                let k = out.slot(i, j).expect("in band");
                out.data[k] *= d[j];
            }
        }
        out
    }

    /// Adds `d` to the main diagonal.
    pub fn add_diagonal(&self, d: &[f64]) -> BandedMatrix {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for (i, &v) in d.iter().enumerate() {
            out.add_to(i, i, Complex64::new(v, 0.0));
        }
        out
    }

    pub fn conj_transpose(&self) -> BandedMatrix {
        let mut out = BandedMatrix::zeros(self.n, self.half);
        for (i, j, v) in self.entries() {
            out.set(j, i, v.conj());
        }
        out
    }

    pub fn transpose(&self) -> BandedMatrix {
        let mut out = BandedMatrix::zeros(self.n, self.half);
        for (i, j, v) in self.entries() {
            out.set(j, i, v);
        }
        out
    }

    /// `max |A_ij − B_ij|`.
    pub fn max_abs_diff(&self, other: &BandedMatrix) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.conj_transpose())
    }

    /// `max |WA − (WA)†|` for `W = diag(w)`: zero when `A` is self-adjoint
    /// under the inner product `⟨f, g⟩ = Σ w f̄ g`.
    pub fn weighted_hermiticity_defect(&self, w: &[f64]) -> f64 {
        self.scale_rows(w).hermiticity_defect()
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Largest offset from the diagonal holding a non-zero entry.
    pub fn occupied_half_bandwidth(&self) -> usize {
        self.entries()
            .filter(|(_, _, v)| *v != ZERO)
            .map(|(i, j, _)| i.abs_diff(j))
            .max()
            .unwrap_or(0)
    }

    /// Every stored entry, zeros included, row by row.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |i| self.row_range(i).map(move |j| (i, j, self.get(i, j))))
    }

    /// Real parts of `(sub, diag, super)` for a tridiagonal matrix.
    pub fn real_tridiagonal(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let diag = (0..n).map(|i| self.get(i, i).re).collect();
        let lower = (0..n.saturating_sub(1)).map(|i| self.get(i + 1, i).re).collect();
        let upper = (0..n.saturating_sub(1)).map(|i| self.get(i, i + 1).re).collect();
        (lower, diag, upper)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.n, self.n, ZERO);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v.re;
        }
        m
    }
}
