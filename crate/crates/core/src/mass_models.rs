//! Mass profiles `m`, scalar multipliers `S`, and the relation that makes
//! a radial pair `(m, S)` generate one another:
//!
//! ```text
//! m(r) = S(r) [1 + (r/N)(S'/S − m'/2m)]   ⟺   S(r) = N √m r^(−N) [∫ r^(N−1) √m dr + c0]
//! ```
//!
//! Masses are dimensionless multipliers of the rest mass (ħ = 2m₀ = c = 1).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{centered_derivative, cumulative_simpson, CubicHermite, Grid};

/// Shared real-valued function of one coordinate.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of degrees of freedom used when the caller has no reason to pick
/// another value.
pub const DEFAULT_DOF: u32 = 3;

/// Lower end of the default radial working domain; several catalog masses
/// vanish at the origin.
pub const DEFAULT_R_MIN: f64 = 0.1;

/// How a profile was constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ProfileKind {
    AnalyticCatalog { tag: String, params: BTreeMap<String, f64> },
    Tabulated { points: usize, min: f64, max: f64 },
    Custom { name: String },
}

/// Positive position-dependent mass multiplier with its first two derivatives.
#[derive(Clone)]
pub struct MassProfile {
    m: RealFn,
    dm: RealFn,
    ddm: RealFn,
    kind: ProfileKind,
    radial: bool,
    constant: bool,
}

impl fmt::Debug for MassProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MassProfile")
            .field("kind", &self.kind)
            .field("radial", &self.radial)
            .field("constant", &self.constant)
            .finish()
    }
}

impl MassProfile {
    pub fn custom(
        name: impl Into<String>,
        radial: bool,
        m: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dm: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ddm: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        MassProfile {
            m: Arc::new(m),
            dm: Arc::new(dm),
            ddm: Arc::new(ddm),
            kind: ProfileKind::Custom { name: name.into() },
            radial,
            constant: false,
        }
    }

    fn catalog(
        tag: &str,
        params: &[(&str, f64)],
        radial: bool,
        m: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dm: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ddm: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        MassProfile {
            m: Arc::new(m),
            dm: Arc::new(dm),
            ddm: Arc::new(ddm),
            kind: ProfileKind::AnalyticCatalog {
                tag: tag.to_string(),
                params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            },
            radial,
            constant: false,
        }
    }

    /// `m ≡ value`. Usable both as a 1D and as a radial profile.
    pub fn constant(value: f64) -> Self {
        let mut p = MassProfile::catalog("constant", &[("value", value)], true, move |_| value, |_| 0.0, |_| 0.0);
        p.constant = true;
        p
    }

    /// The constant-mass limit `m ≡ 1`.
    pub fn unit() -> Self {
        MassProfile::constant(1.0)
    }

    /// `m(x) = 1/(1+x²)²`, for which `q(x) = arctan x`.
    pub fn inverse_quartic() -> Self {
        MassProfile::catalog(
            "inverse-quartic",
            &[],
            false,
            |x| (1.0 + x * x).powi(-2),
            |x| -4.0 * x * (1.0 + x * x).powi(-3),
            |x| (20.0 * x * x - 4.0) * (1.0 + x * x).powi(-4),
        )
    }

    /// `m(x) = exp(−x²/width)`.
    pub fn gaussian(width: f64) -> Self {
        MassProfile::catalog(
            "gaussian",
            &[("width", width)],
            false,
            move |x| (-x * x / width).exp(),
            move |x| -2.0 * x / width * (-x * x / width).exp(),
            move |x| (4.0 * x * x / (width * width) - 2.0 / width) * (-x * x / width).exp(),
        )
    }

    /// `m(x) = 1 + a x²`.
    pub fn quadratic(a: f64) -> Self {
        MassProfile::catalog(
            "quadratic",
            &[("a", a)],
            false,
            move |x| 1.0 + a * x * x,
            move |x| 2.0 * a * x,
            move |_| 2.0 * a,
        )
    }

    /// Tabulated profile with derivatives from second-order centered
    /// differences (one-sided at the ends).
    pub fn tabulated(grid: &Grid, values: Vec<f64>, radial: bool) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 3 {
            return Err(Error::InvalidGrid("tabulated profile needs at least 3 points".into()));
        }
        let d1 = centered_derivative(grid.points(), &values);
        MassProfile::tabulated_with_slopes(grid, values, d1, radial)
    }

    /// Tabulated profile whose first derivative is known at the nodes.
    pub fn tabulated_with_slopes(grid: &Grid, values: Vec<f64>, slopes: Vec<f64>, radial: bool) -> Result<Self> {
        for (x, v) in grid.points().iter().zip(&values) {
            if !(*v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("tabulated mass must be positive, got {v}"), *x));
            }
        }
        let x = grid.points().to_vec();
        let d2 = centered_derivative(&x, &slopes);
        let d3 = centered_derivative(&x, &d2);
        let value = Arc::new(CubicHermite::new(x.clone(), values, slopes.clone()));
        let first = Arc::new(CubicHermite::new(x.clone(), slopes, d2.clone()));
        let second = Arc::new(CubicHermite::new(x, d2, d3));
        let (v, f, s) = (value.clone(), first, second);
        Ok(MassProfile {
            m: Arc::new(move |r| v.eval(r).unwrap_or(f64::NAN)),
            dm: Arc::new(move |r| f.eval(r).unwrap_or(f64::NAN)),
            ddm: Arc::new(move |r| s.eval(r).unwrap_or(f64::NAN)),
            kind: ProfileKind::Tabulated {
                points: grid.len(),
                min: grid.min(),
                max: grid.max(),
            },
            radial,
            constant: false,
        })
    }

    /// Two-column CSV `(position, value)`, header optional.
    pub fn from_csv<R: Read>(reader: R, radial: bool) -> Result<Self> {
        let (x, v) = read_two_column_csv(reader)?;
        let grid = Grid::from_vec(x)?;
        MassProfile::tabulated(&grid, v, radial)
    }

    /// Marks the profile as a function of `r = |x|` only.
    pub fn into_radial(mut self) -> Self {
        self.radial = true;
        self
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.m)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.dm)(x)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        (self.ddm)(x)
    }

    /// `m(x)` or a domain error when it is not a finite positive number.
    pub fn checked_value(&self, x: f64) -> Result<f64> {
        let v = self.value(x);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!("mass must be positive, got m = {v}"), x))
        }
    }

    /// Checks positivity on every point of a grid.
    pub fn check_positive(&self, points: &[f64]) -> Result<()> {
        points.iter().try_for_each(|&x| self.checked_value(x).map(|_| ()))
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn is_radial(&self) -> bool {
        self.radial
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn function(&self) -> RealFn {
        self.m.clone()
    }
}

/// Radial scalar multiplier `S(r)` appearing in `A(x) = S(x) Ã(x)`.
#[derive(Clone)]
pub struct ScalarMultiplier {
    s: RealFn,
    ds: RealFn,
    kind: ProfileKind,
    singular_points: Vec<f64>,
}

impl fmt::Debug for ScalarMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarMultiplier")
            .field("kind", &self.kind)
            .field("singular_points", &self.singular_points)
            .finish()
    }
}

impl ScalarMultiplier {
    pub fn custom(
        name: impl Into<String>,
        s: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ds: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarMultiplier {
            s: Arc::new(s),
            ds: Arc::new(ds),
            kind: ProfileKind::Custom { name: name.into() },
            singular_points: Vec::new(),
        }
    }

    fn catalog(
        tag: &str,
        params: &[(&str, f64)],
        s: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ds: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarMultiplier {
            s: Arc::new(s),
            ds: Arc::new(ds),
            kind: ProfileKind::AnalyticCatalog {
                tag: tag.to_string(),
                params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            },
            singular_points: Vec::new(),
        }
    }

    pub fn constant(value: f64) -> Self {
        ScalarMultiplier::catalog("constant", &[("value", value)], move |_| value, |_| 0.0)
    }

    /// Tabulated multiplier interpolated by cubic Hermite through `(S, S')`.
    pub fn tabulated(grid: &Grid, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() || slopes.len() != grid.len() {
            return Err(Error::InvalidArgument("tabulated multiplier length mismatch".into()));
        }
        let x = grid.points().to_vec();
        let d2 = centered_derivative(&x, &slopes);
        let value = Arc::new(CubicHermite::new(x.clone(), values, slopes.clone()));
        let first = Arc::new(CubicHermite::new(x, slopes, d2));
        Ok(ScalarMultiplier {
            s: Arc::new(move |r| value.eval(r).unwrap_or(f64::NAN)),
            ds: Arc::new(move |r| first.eval(r).unwrap_or(f64::NAN)),
            kind: ProfileKind::Tabulated {
                points: grid.len(),
                min: grid.min(),
                max: grid.max(),
            },
            singular_points: Vec::new(),
        })
    }

    /// Two-column CSV `(r, S)`, header optional; `S'` by centered differences.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let (x, v) = read_two_column_csv(reader)?;
        let grid = Grid::from_vec(x)?;
        if grid.len() < 3 {
            return Err(Error::InvalidGrid(
                "tabulated multiplier needs at least 3 points".into(),
            ));
        }
        let d = centered_derivative(grid.points(), &v);
        ScalarMultiplier::tabulated(&grid, v, d)
    }

    pub fn with_singular_point(mut self, r: f64) -> Self {
        self.singular_points.push(r);
        self
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.s)(r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        (self.ds)(r)
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn singular_points(&self) -> &[f64] {
        &self.singular_points
    }

    /// True when `r` sits on a declared singular point (to 1e-12).
    pub fn is_singular_at(&self, r: f64) -> bool {
        self.singular_points.iter().any(|&s| (s - r).abs() <= 1e-12)
    }
}

/// Closed-form generating pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairTag {
    /// `S = 1 ⟺ m = 1/(1 + λ r^(−2N))`
    SUnity,
    /// `S = m ⟺ m = const`
    SEqualsM,
    /// `S = m^b ⟺ m = [1 + λ r^(−2N(b−1)/(2b−1))]^(1/(b−1))`
    SPowerB,
    /// `S = λ r^ν ⟺ m = (2N+ν)λ / [(2N+ν)λ c r^(−2(N+ν)) + 2N r^(−ν)]`
    SPowerLawNu,
    /// `m = λ r² ⟺ S = Nλr²/(N+1)`
    MQuadratic,
    /// `m = λ r^(2b) ⟺ S = Nλr^(2b)/(N+b)`
    MPower2b,
    /// `m = 1/(1 + α r^N) ⟺ S = (2/α) r^(−N)`
    MRational,
}

impl PairTag {
    pub const ALL: [PairTag; 7] = [
        PairTag::SUnity,
        PairTag::SEqualsM,
        PairTag::SPowerB,
        PairTag::SPowerLawNu,
        PairTag::MQuadratic,
        PairTag::MPower2b,
        PairTag::MRational,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PairTag::SUnity => "s-unity",
            PairTag::SEqualsM => "s-equals-m",
            PairTag::SPowerB => "s-power-b",
            PairTag::SPowerLawNu => "s-power-law-nu",
            PairTag::MQuadratic => "m-quadratic",
            PairTag::MPower2b => "m-power-2b",
            PairTag::MRational => "m-rational",
        }
    }

    /// Parameter names and their defaults.
    pub fn default_params(self) -> &'static [(&'static str, f64)] {
        match self {
            PairTag::SUnity => &[("lambda", 1.0)],
            PairTag::SEqualsM => &[("value", 1.0)],
            PairTag::SPowerB => &[("lambda", 1.0), ("b", 2.0)],
            PairTag::SPowerLawNu => &[("lambda", 1.0), ("nu", 1.0), ("c", 1.0)],
            PairTag::MQuadratic => &[("lambda", 1.0)],
            PairTag::MPower2b => &[("lambda", 1.0), ("b", 2.0)],
            PairTag::MRational => &[("alpha", 2.0)],
        }
    }
}

impl fmt::Display for PairTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PairTag::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| {
            let valid: Vec<_> = PairTag::ALL.iter().map(|t| t.as_str()).collect();
            Error::InvalidArgument(format!("unknown catalog tag '{s}'; valid tags: {}", valid.join(", ")))
        })
    }
}

/// A closed-form `(m, S)` pair from the catalog.
#[derive(Debug, Clone)]
pub struct PairCatalogEntry {
    pub tag: PairTag,
    pub params: BTreeMap<String, f64>,
    pub dof: u32,
    pub mass: MassProfile,
    pub scalar: ScalarMultiplier,
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg.into()))
    }
}

impl PairCatalogEntry {
    fn assemble(tag: PairTag, params: &[(&str, f64)], dof: u32, mass: MassProfile, scalar: ScalarMultiplier) -> Self {
        PairCatalogEntry {
            tag,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            dof,
            mass: mass.into_radial(),
            scalar,
        }
    }

    pub fn s_unity(lambda: f64, dof: u32) -> Result<Self> {
        require(lambda >= 0.0, "s-unity needs lambda >= 0 to keep m positive")?;
        let n2 = 2.0 * dof as f64;
        let w = move |r: f64| 1.0 + lambda * r.powf(-n2);
        let w1 = move |r: f64| -n2 * lambda * r.powf(-n2 - 1.0);
        let w2 = move |r: f64| n2 * (n2 + 1.0) * lambda * r.powf(-n2 - 2.0);
        let p = [("lambda", lambda)];
        let mass = reciprocal_profile("s-unity", &p, w, w1, w2);
        let scalar = ScalarMultiplier::catalog("s-unity", &p, |_| 1.0, |_| 0.0);
        Ok(PairCatalogEntry::assemble(PairTag::SUnity, &p, dof, mass, scalar))
    }

    pub fn s_equals_m(value: f64, dof: u32) -> Result<Self> {
        require(value > 0.0, "s-equals-m needs a positive constant")?;
        let p = [("value", value)];
        Ok(PairCatalogEntry::assemble(
            PairTag::SEqualsM,
            &p,
            dof,
            MassProfile::constant(value),
            ScalarMultiplier::constant(value),
        ))
    }

    pub fn s_power_b(lambda: f64, b: f64, dof: u32) -> Result<Self> {
        // Restricted to lambda >= 0 so the base 1 + λ r^(−k) stays positive.
        require(lambda >= 0.0, "s-power-b is restricted to lambda >= 0")?;
        require(b != 1.0 && b != 0.5, "s-power-b needs b ∉ {1, 1/2}")?;
        let k = 2.0 * dof as f64 * (b - 1.0) / (2.0 * b - 1.0);
        let pw = 1.0 / (b - 1.0);
        let u = move |r: f64| 1.0 + lambda * r.powf(-k);
        let u1 = move |r: f64| -k * lambda * r.powf(-k - 1.0);
        let u2 = move |r: f64| k * (k + 1.0) * lambda * r.powf(-k - 2.0);
        let m = move |r: f64| u(r).powf(pw);
        let dm = move |r: f64| pw * u(r).powf(pw - 1.0) * u1(r);
        let ddm =
            move |r: f64| pw * (pw - 1.0) * u(r).powf(pw - 2.0) * u1(r).powi(2) + pw * u(r).powf(pw - 1.0) * u2(r);
        let p = [("lambda", lambda), ("b", b)];
        let mass = MassProfile::catalog("s-power-b", &p, true, m, dm, ddm);
        let scalar = ScalarMultiplier::catalog(
            "s-power-b",
            &p,
            move |r| m(r).powf(b),
            move |r| b * m(r).powf(b - 1.0) * dm(r),
        );
        Ok(PairCatalogEntry::assemble(PairTag::SPowerB, &p, dof, mass, scalar))
    }

    /// `c` is the integration constant multiplying `r^(−2(N+ν))` in `1/m`;
    /// the printed closed form has `c = 1`.
    pub fn s_power_law_nu(lambda: f64, nu: f64, c: f64, dof: u32) -> Result<Self> {
        let n = dof as f64;
        require(lambda > 0.0, "s-power-law-nu needs lambda > 0")?;
        require(2.0 * n + nu > 0.0, "s-power-law-nu needs 2N + nu > 0")?;
        require(c >= 0.0, "s-power-law-nu needs c >= 0")?;
        let e1 = 2.0 * (n + nu);
        let a = 2.0 * n / ((2.0 * n + nu) * lambda);
        let w = move |r: f64| c * r.powf(-e1) + a * r.powf(-nu);
        let w1 = move |r: f64| -e1 * c * r.powf(-e1 - 1.0) - nu * a * r.powf(-nu - 1.0);
        let w2 = move |r: f64| e1 * (e1 + 1.0) * c * r.powf(-e1 - 2.0) + nu * (nu + 1.0) * a * r.powf(-nu - 2.0);
        let p = [("lambda", lambda), ("nu", nu), ("c", c)];
        let mass = reciprocal_profile("s-power-law-nu", &p, w, w1, w2);
        let scalar = ScalarMultiplier::catalog(
            "s-power-law-nu",
            &p,
            move |r| lambda * r.powf(nu),
            move |r| lambda * nu * r.powf(nu - 1.0),
        );
        Ok(PairCatalogEntry::assemble(PairTag::SPowerLawNu, &p, dof, mass, scalar))
    }

    pub fn m_quadratic(lambda: f64, dof: u32) -> Result<Self> {
        require(lambda > 0.0, "m-quadratic needs lambda > 0")?;
        let n = dof as f64;
        let p = [("lambda", lambda)];
        let mass = MassProfile::catalog(
            "m-quadratic",
            &p,
            true,
            move |r| lambda * r * r,
            move |r| 2.0 * lambda * r,
            move |_| 2.0 * lambda,
        );
        let k = n * lambda / (n + 1.0);
        let scalar = ScalarMultiplier::catalog("m-quadratic", &p, move |r| k * r * r, move |r| 2.0 * k * r);
        Ok(PairCatalogEntry::assemble(PairTag::MQuadratic, &p, dof, mass, scalar))
    }

    pub fn m_power_2b(lambda: f64, b: f64, dof: u32) -> Result<Self> {
        let n = dof as f64;
        require(lambda > 0.0, "m-power-2b needs lambda > 0")?;
        require(n + b > 0.0, "m-power-2b needs N + b > 0")?;
        let p = [("lambda", lambda), ("b", b)];
        let mass = MassProfile::catalog(
            "m-power-2b",
            &p,
            true,
            move |r| lambda * r.powf(2.0 * b),
            move |r| 2.0 * b * lambda * r.powf(2.0 * b - 1.0),
            move |r| 2.0 * b * (2.0 * b - 1.0) * lambda * r.powf(2.0 * b - 2.0),
        );
        let k = n * lambda / (n + b);
        let scalar = ScalarMultiplier::catalog(
            "m-power-2b",
            &p,
            move |r| k * r.powf(2.0 * b),
            move |r| 2.0 * b * k * r.powf(2.0 * b - 1.0),
        );
        Ok(PairCatalogEntry::assemble(PairTag::MPower2b, &p, dof, mass, scalar))
    }

    pub fn m_rational(alpha: f64, dof: u32) -> Result<Self> {
        require(alpha > 0.0, "m-rational needs alpha > 0")?;
        let n = dof as f64;
        let p = [("alpha", alpha)];
        let mass = reciprocal_profile(
            "m-rational",
            &p,
            move |r| 1.0 + alpha * r.powf(n),
            move |r| n * alpha * r.powf(n - 1.0),
            move |r| n * (n - 1.0) * alpha * r.powf(n - 2.0),
        );
        let scalar = ScalarMultiplier::catalog(
            "m-rational",
            &p,
            move |r| 2.0 / alpha * r.powf(-n),
            move |r| -2.0 * n / alpha * r.powf(-n - 1.0),
        )
        .with_singular_point(0.0);
        Ok(PairCatalogEntry::assemble(PairTag::MRational, &p, dof, mass, scalar))
    }

    /// Builds an entry from a tag and a (possibly partial) parameter map.
    pub fn from_tag(tag: PairTag, params: &BTreeMap<String, f64>, dof: u32) -> Result<Self> {
        for key in params.keys() {
            if !tag.default_params().iter().any(|(k, _)| k == key) {
                return Err(Error::InvalidArgument(format!(
                    "unknown parameter '{key}' for catalog tag '{tag}'"
                )));
            }
        }
        let get = |name: &str| {
            params.get(name).copied().unwrap_or_else(|| {
                tag.default_params()
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .expect("default exists")
            })
        };
        match tag {
            PairTag::SUnity => PairCatalogEntry::s_unity(get("lambda"), dof),
            PairTag::SEqualsM => PairCatalogEntry::s_equals_m(get("value"), dof),
            PairTag::SPowerB => PairCatalogEntry::s_power_b(get("lambda"), get("b"), dof),
            PairTag::SPowerLawNu => PairCatalogEntry::s_power_law_nu(get("lambda"), get("nu"), get("c"), dof),
            PairTag::MQuadratic => PairCatalogEntry::m_quadratic(get("lambda"), dof),
            PairTag::MPower2b => PairCatalogEntry::m_power_2b(get("lambda"), get("b"), dof),
            PairTag::MRational => PairCatalogEntry::m_rational(get("alpha"), dof),
        }
    }

    /// Every tag with its default parameters at `N = dof`.
    pub fn defaults(dof: u32) -> Vec<Self> {
        PairTag::ALL
            .into_iter()
            .map(|t| PairCatalogEntry::from_tag(t, &BTreeMap::new(), dof).expect("defaults are valid"))
            .collect()
    }

    /// The constant `c0` that makes [`scalar_from_mass`] started at `r_first`
    /// reproduce this entry's closed-form `S`.
    pub fn matched_constant(&self, r_first: f64) -> f64 {
        let n = self.dof as f64;
        self.scalar.value(r_first) * r_first.powf(n) / (n * self.mass.value(r_first).sqrt())
    }

    /// Left-hand identity residual `m − S[1 + (r/N)(S'/S − m'/2m)]` at `r`.
    pub fn relation_residual(&self, r: f64) -> f64 {
        generating_relation_residual(&self.mass, &self.scalar, self.dof, r)
    }
}

fn reciprocal_profile(
    tag: &str,
    params: &[(&str, f64)],
    w: impl Fn(f64) -> f64 + Send + Sync + Copy + 'static,
    w1: impl Fn(f64) -> f64 + Send + Sync + Copy + 'static,
    w2: impl Fn(f64) -> f64 + Send + Sync + Copy + 'static,
) -> MassProfile {
    MassProfile::catalog(
        tag,
        params,
        true,
        move |r| 1.0 / w(r),
        move |r| -w1(r) / (w(r) * w(r)),
        move |r| (2.0 * w1(r) * w1(r) - w(r) * w2(r)) / w(r).powi(3),
    )
}

/// `m − S[1 + (r/N)(S'/S − m'/2m)]` written without the divisions by `S`.
pub fn generating_relation_residual(m: &MassProfile, s: &ScalarMultiplier, dof: u32, r: f64) -> f64 {
    let n = dof as f64;
    let mv = m.value(r);
    let sv = s.value(r);
    mv - sv - (r / n) * (s.derivative(r) - sv * m.derivative(r) / (2.0 * mv))
}

fn check_radial_grid(m: &MassProfile, r_grid: &Grid) -> Result<()> {
    if !m.is_radial() {
        return Err(Error::domain("mass profile is not radial", f64::NAN));
    }
    if r_grid.min() <= 0.0 {
        return Err(Error::domain("radius must be positive", r_grid.min()));
    }
    m.check_positive(r_grid.points())
}

/// `S(r) = N √m r^(−N) [∫_{r_first}^{r} s^(N−1) √m ds + c0]` tabulated on
/// `r_grid`. `S'` at the nodes follows from differentiating the same
/// expression, so the result interpolates with cubic Hermite accuracy.
pub fn scalar_from_mass(m: &MassProfile, dof: u32, r_grid: &Grid, c0: f64) -> Result<ScalarMultiplier> {
    check_radial_grid(m, r_grid)?;
    if dof == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let n = dof as f64;
    let r = r_grid.points();
    let integrand: Vec<f64> = r.iter().map(|&x| x.powf(n - 1.0) * m.value(x).sqrt()).collect();
    let cum = cumulative_simpson(r, &integrand);
    let mut s = Vec::with_capacity(r.len());
    let mut ds = Vec::with_capacity(r.len());
    for (i, &x) in r.iter().enumerate() {
        let mv = m.value(x);
        let sv = n * mv.sqrt() * x.powf(-n) * (cum[i] + c0);
        s.push(sv);
        ds.push(sv * (m.derivative(x) / (2.0 * mv) - n / x) + n * mv / x);
    }
    let mut out = ScalarMultiplier::tabulated(r_grid, s, ds)?;
    out.kind = ProfileKind::Tabulated {
        points: r_grid.len(),
        min: r_grid.min(),
        max: r_grid.max(),
    };
    Ok(out)
}

/// RK4 substeps per grid interval used by [`mass_from_scalar`].
pub const DEFAULT_RK4_SUBSTEPS: usize = 8;

/// Solves the left identity for `m` as the first-order ODE
/// `(ln m)' = 2S'/S + (2N/r)(1 − m/S)` with `m(r0) = m0`.
pub fn mass_from_scalar(s: &ScalarMultiplier, dof: u32, r0: f64, m0: f64, r_grid: &Grid) -> Result<MassProfile> {
    mass_from_scalar_with(s, dof, r0, m0, r_grid, DEFAULT_RK4_SUBSTEPS)
}

pub fn mass_from_scalar_with(
    s: &ScalarMultiplier,
    dof: u32,
    r0: f64,
    m0: f64,
    r_grid: &Grid,
    substeps: usize,
) -> Result<MassProfile> {
    if !(m0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "initial mass must be positive, got {m0}"
        )));
    }
    if r_grid.min() <= 0.0 {
        return Err(Error::domain("radius must be positive", r_grid.min()));
    }
    if r0 < r_grid.min() || r0 > r_grid.max() {
        return Err(Error::InvalidArgument(format!("r0 = {r0} outside the radial grid")));
    }
    let n = dof as f64;
    let substeps = substeps.max(1);
    let rhs = |r: f64, y: f64| -> Result<f64> {
        let sv = s.value(r);
        if sv == 0.0 {
            return Err(Error::SingularCoefficient {
                what: "S(r) = 0".into(),
                r,
            });
        }
        Ok(2.0 * s.derivative(r) / sv + 2.0 * n / r * (1.0 - y.exp() / sv))
    };
    let step = |r: f64, y: f64, h: f64| -> Result<f64> {
        let k1 = rhs(r, y)?;
        let k2 = rhs(r + h / 2.0, y + h / 2.0 * k1)?;
        let k3 = rhs(r + h / 2.0, y + h / 2.0 * k2)?;
        let k4 = rhs(r + h, y + h * k3)?;
        Ok(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    };
    let advance = |from: f64, to: f64, mut y: f64| -> Result<f64> {
        let h = (to - from) / substeps as f64;
        let mut r = from;
        for _ in 0..substeps {
            let next = step(r, y, h)?;
            if !next.is_finite() {
                return Err(Error::Integration {
                    what: "non-finite ln m".into(),
                    last_good_r: r,
                });
            }
            y = next;
            r += h;
        }
        Ok(y)
    };

    let pts = r_grid.points();
    let start = pts
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - r0).abs().total_cmp(&(b.1 - r0).abs()))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let mut log_m = vec![0.0; pts.len()];
    log_m[start] = if pts[start] == r0 {
        m0.ln()
    } else {
        advance(r0, pts[start], m0.ln())?
    };
    for i in start + 1..pts.len() {
        log_m[i] = advance(pts[i - 1], pts[i], log_m[i - 1])?;
    }
    for i in (0..start).rev() {
        log_m[i] = advance(pts[i + 1], pts[i], log_m[i + 1])?;
    }
    let mut values = Vec::with_capacity(pts.len());
    let mut slopes = Vec::with_capacity(pts.len());
    for (&r, &y) in pts.iter().zip(&log_m) {
        let mv = y.exp();
        values.push(mv);
        slopes.push(mv * rhs(r, y)?);
    }
    MassProfile::tabulated_with_slopes(r_grid, values, slopes, true)
}

/// Outcome of checking a catalog pair against the generating relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResidualReport {
    pub tag: PairTag,
    pub dof: u32,
    pub max_residual: f64,
    pub worst_r: f64,
    pub tol: f64,
    pub passed: bool,
    /// Radii skipped because they sit on a declared singular point.
    pub skipped: Vec<f64>,
}

pub fn verify_pair(entry: &PairCatalogEntry, r_grid: &Grid, tol: f64) -> PairResidualReport {
    let mut worst = 0.0_f64;
    let mut worst_r = f64::NAN;
    let mut skipped = Vec::new();
    for &r in r_grid.points() {
        if entry.scalar.is_singular_at(r) {
            skipped.push(r);
            continue;
        }
        let res = entry.relation_residual(r).abs();
        if !res.is_finite() {
            skipped.push(r);
            continue;
        }
        if res > worst || worst_r.is_nan() {
            worst = worst.max(res);
            worst_r = r;
        }
    }
    PairResidualReport {
        tag: entry.tag,
        dof: entry.dof,
        max_residual: worst,
        worst_r,
        tol,
        passed: worst <= tol,
        skipped,
    }
}

fn read_two_column_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let mut x = Vec::new();
    let mut v = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "line {}: expected 2 columns, found {}",
                line + 1,
                rec.len()
            )));
        }
        let a = rec[0].parse::<f64>();
        let b = rec[1].parse::<f64>();
        match (a, b) {
            (Ok(a), Ok(b)) => {
                x.push(a);
                v.push(b);
            }
            // A non-numeric first row is a header.
            _ if line == 0 => continue,
            _ => return Err(Error::InvalidArgument(format!("line {}: non-numeric value", line + 1))),
        }
    }
    Ok((x, v))
}
