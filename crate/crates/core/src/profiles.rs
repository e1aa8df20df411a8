//! Base flows `U(y)` on `[0, a]`.

use crate::registry::Registry;
use crate::{Error, Result};
use std::fmt::Debug;
use std::path::Path;
use std::sync::Arc;

pub trait FlowProfile: Debug + Send + Sync {
    fn name(&self) -> &str;

    /// Channel height `a`.
    fn height(&self) -> f64;

    /// `(U(y), U'(y))`.
    fn eval(&self, y: f64) -> (f64, f64);

    /// `U''(y)` when known in closed form.
    fn second_derivative(&self, _y: f64) -> Option<f64> {
        None
    }

    /// Degree of `U` when it is a polynomial.
    fn polynomial_degree(&self) -> Option<usize> {
        None
    }
}

fn check_height(a: f64) -> Result<f64> {
    if a.is_finite() && a > 0.0 {
        Ok(a)
    } else {
        Err(Error::param("a", format!("must be positive, got {a}")))
    }
}

/// `U = 4 y (a - y) / a^2`, unit centerline speed.
#[derive(Clone, Debug)]
pub struct Poiseuille {
    a: f64,
}

impl Poiseuille {
    pub fn new(a: f64) -> Result<Self> {
        Ok(Self { a: check_height(a)? })
    }
}

impl FlowProfile for Poiseuille {
    fn name(&self) -> &str {
        "poiseuille"
    }

    fn height(&self) -> f64 {
        self.a
    }

    fn eval(&self, y: f64) -> (f64, f64) {
        let s = 4.0 / (self.a * self.a);
        (s * y * (self.a - y), s * (self.a - 2.0 * y))
    }

    fn second_derivative(&self, _y: f64) -> Option<f64> {
        Some(-8.0 / (self.a * self.a))
    }

    fn polynomial_degree(&self) -> Option<usize> {
        Some(2)
    }
}

/// `U = y / a`.
#[derive(Clone, Debug)]
pub struct Couette {
    a: f64,
}

impl Couette {
    pub fn new(a: f64) -> Result<Self> {
        Ok(Self { a: check_height(a)? })
    }
}

impl FlowProfile for Couette {
    fn name(&self) -> &str {
        "couette"
    }

    fn height(&self) -> f64 {
        self.a
    }

    fn eval(&self, y: f64) -> (f64, f64) {
        (y / self.a, 1.0 / self.a)
    }

    fn second_derivative(&self, _y: f64) -> Option<f64> {
        Some(0.0)
    }

    fn polynomial_degree(&self) -> Option<usize> {
        Some(1)
    }
}

/// `U = tanh(y)`, a smooth boundary-layer stand-in.
#[derive(Clone, Debug)]
pub struct TanhLayer {
    a: f64,
}

impl TanhLayer {
    pub fn new(a: f64) -> Result<Self> {
        Ok(Self { a: check_height(a)? })
    }
}

impl FlowProfile for TanhLayer {
    fn name(&self) -> &str {
        "tanh"
    }

    fn height(&self) -> f64 {
        self.a
    }

    fn eval(&self, y: f64) -> (f64, f64) {
        let t = y.tanh();
        (t, 1.0 - t * t)
    }

    fn second_derivative(&self, y: f64) -> Option<f64> {
        let t = y.tanh();
        Some(-2.0 * t * (1.0 - t * t))
    }
}

/// Monotone piecewise-cubic (PCHIP) interpolant of `(y, U)` samples.
#[derive(Clone, Debug)]
pub struct Tabulated {
    a: f64,
    y: Vec<f64>,
    u: Vec<f64>,
    d: Vec<f64>,
}

impl Tabulated {
    pub fn new(samples: &[(f64, f64)], a: f64) -> Result<Self> {
        let a = check_height(a)?;
        if samples.len() < 2 {
            return Err(Error::Profile("need at least two samples".into()));
        }
        if samples.iter().any(|(y, u)| !y.is_finite() || !u.is_finite()) {
            return Err(Error::Profile("non-finite sample".into()));
        }
        if let Some(k) = samples.windows(2).position(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Profile(format!(
                "samples not strictly increasing in y at row {}",
                k + 1
            )));
        }
        let slop = 1e-12 * a;
        let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
        if first > slop || last < a - slop {
            return Err(Error::Profile(format!(
                "samples cover [{first}, {last}], need [0, {a}]"
            )));
        }
        let y: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let u: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let d = pchip_slopes(&y, &u);
        Ok(Self { a, y, u, d })
    }

    /// Parses a two-column `y,U` CSV with a header row.
    pub fn from_csv_str(text: &str, a: f64) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(ys), Some(us)) = (cols.next(), cols.next()) else {
                return Err(Error::Profile(format!("line {}: expected two columns", lineno + 1)));
            };
            match (ys.parse::<f64>(), us.parse::<f64>()) {
                (Ok(y), Ok(u)) => samples.push((y, u)),
                _ if samples.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(Error::Profile(format!(
                        "line {}: cannot parse '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(&samples, a)
    }

    pub fn from_csv_file(path: &Path, a: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Profile(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text, a)
    }
}

/// Fritsch-Carlson slopes with the three-point shape-preserving end rule.
fn pchip_slopes(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (f[k + 1] - f[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let mut s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if s.signum() != m0.signum() {
            s = 0.0;
        } else if m0.signum() != m1.signum() && s.abs() > 3.0 * m0.abs() {
            s = 3.0 * m0;
        }
        s
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

impl FlowProfile for Tabulated {
    fn name(&self) -> &str {
        "tabulated"
    }

    fn height(&self) -> f64 {
        self.a
    }

    fn eval(&self, y: f64) -> (f64, f64) {
        let n = self.y.len();
        let k = match self.y.binary_search_by(|p| p.total_cmp(&y)) {
            Ok(k) => k.min(n - 2),
            Err(0) => 0,
            Err(k) => (k - 1).min(n - 2),
        };
        let h = self.y[k + 1] - self.y[k];
        let t = (y - self.y[k]) / h;
        let (f0, f1, d0, d1) = (self.u[k], self.u[k + 1], self.d[k], self.d[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let u = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * h * d1;
        let du = (6.0 * t2 - 6.0 * t) * f0 / h
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * f1 / h
            + (3.0 * t2 - 2.0 * t) * d1;
        (u, du)
    }
}

/// `U + kappa`.
#[derive(Clone, Debug)]
pub struct Shifted {
    inner: Arc<dyn FlowProfile>,
    kappa: f64,
    name: String,
}

impl Shifted {
    pub fn new(inner: Arc<dyn FlowProfile>, kappa: f64) -> Self {
        let name = format!("{}{:+}", inner.name(), kappa);
        Self { inner, kappa, name }
    }
}

impl FlowProfile for Shifted {
    fn name(&self) -> &str {
        &self.name
    }

    fn height(&self) -> f64 {
        self.inner.height()
    }

    fn eval(&self, y: f64) -> (f64, f64) {
        let (u, du) = self.inner.eval(y);
        (u + self.kappa, du)
    }

    fn second_derivative(&self, y: f64) -> Option<f64> {
        self.inner.second_derivative(y)
    }

    fn polynomial_degree(&self) -> Option<usize> {
        self.inner.polynomial_degree()
    }
}

pub type ProfileCtor = fn(f64) -> Result<Arc<dyn FlowProfile>>;

pub static PROFILES: Registry<ProfileCtor> = Registry::new(
    "profile",
    &[
        ("poiseuille", |a| Ok(Arc::new(Poiseuille::new(a)?))),
        ("couette", |a| Ok(Arc::new(Couette::new(a)?))),
        ("tanh", |a| Ok(Arc::new(TanhLayer::new(a)?))),
    ],
);

/// Built-in profile by name on `[0, a]`.
pub fn profile_by_name(name: &str, a: f64) -> Result<Arc<dyn FlowProfile>> {
    (PROFILES.get(name)?)(a)
}
