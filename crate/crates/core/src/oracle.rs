//! Chebyshev collocation of the Orr-Sommerfeld problem with clamped walls,
//! an independent check on the finite-element spectra.

use crate::linalg::{stability_order, CMatrix, QzDecomposition};
use crate::profiles::FlowProfile;
use crate::sweep::{locate_critical, CriticalOptions, CriticalOutcome, SearchBox};
use crate::{Error, Result, C64};

pub const MIN_MODES: usize = 16;
/// Extra modes used for the convergence check.
pub const CHECK_MODES: usize = 16;
const CONVERGENCE_TOL: f64 = 1e-8;
const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug)]
pub struct CollocationConfig<'a> {
    /// Chebyshev modes; `m + 1` collocation points.
    pub m: usize,
    pub re: f64,
    pub alpha: f64,
    pub profile: &'a dyn FlowProfile,
}

impl CollocationConfig<'_> {
    fn validate(&self) -> Result<()> {
        if self.m < MIN_MODES {
            return Err(Error::param("m", format!("need at least {MIN_MODES} modes, got {}", self.m)));
        }
        if !(self.re.is_finite() && self.re > 0.0) {
            return Err(Error::param("re", "must be positive"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::param("alpha", "must be positive"));
        }
        Ok(())
    }

    /// Collocation points mapped to `[0, a]`, from `y = a` down to `y = 0`.
    pub fn points(&self) -> Vec<f64> {
        let a = self.profile.height();
        chebyshev_points(self.m).iter().map(|x| 0.5 * a * (1.0 + x)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpectrum {
    /// Physical eigenvalues, descending imaginary part.
    pub eigenvalues: Vec<C64>,
    /// Eigenvalues discarded as spurious (infinite or too large).
    pub discarded: usize,
    /// Leading eigenvalue agrees with the `m + 16` run.
    pub converged: bool,
    /// `|c(m) - c(m + 16)|` of the leading eigenvalue.
    pub convergence_gap: f64,
}

impl OracleSpectrum {
    pub fn leading(&self) -> Option<C64> {
        self.eigenvalues.first().copied()
    }
}

pub fn chebyshev_points(m: usize) -> Vec<f64> {
    (0..=m).map(|j| (std::f64::consts::PI * j as f64 / m as f64).cos()).collect()
}

/// Differentiation matrix on the Chebyshev points of [`chebyshev_points`].
pub fn chebyshev_matrix(m: usize) -> Vec<Vec<f64>> {
    let x = chebyshev_points(m);
    let c: Vec<f64> = (0..=m)
        .map(|j| {
            let w = if j == 0 || j == m { 2.0 } else { 1.0 };
            if j % 2 == 0 { w } else { -w }
        })
        .collect();
    let mut d = vec![vec![0.0; m + 1]; m + 1];
    for i in 0..=m {
        let mut sum = 0.0;
        for j in 0..=m {
            if i != j {
                d[i][j] = c[i] / c[j] / (x[i] - x[j]);
                sum += d[i][j];
            }
        }
        d[i][i] = -sum;
    }
    d
}

fn second_derivative(profile: &dyn FlowProfile, y: f64) -> f64 {
    if let Some(upp) = profile.second_derivative(y) {
        return upp;
    }
    let a = profile.height();
    let h = FD_STEP;
    let up = |y: f64| profile.eval(y).1;
    if y - h < 0.0 {
        (-3.0 * up(y) + 4.0 * up(y + h) - up(y + 2.0 * h)) / (2.0 * h)
    } else if y + h > a {
        (3.0 * up(y) - 4.0 * up(y - h) + up(y - 2.0 * h)) / (2.0 * h)
    } else {
        (up(y + h) - up(y - h)) / (2.0 * h)
    }
}

/// Physical eigenvalues at a single resolution and the number discarded.
pub fn os_eigenvalues(cfg: &CollocationConfig) -> Result<(Vec<C64>, usize)> {
    cfg.validate()?;
    let m = cfg.m;
    let n = m + 1;
    let a = cfg.profile.height();
    let s = 2.0 / a;
    let d1: Vec<Vec<f64>> = chebyshev_matrix(m)
        .into_iter()
        .map(|row| row.into_iter().map(|v| v * s).collect())
        .collect();
    let d1 = CMatrix::from_fn(n, n, |i, j| C64::new(d1[i][j], 0.0));
    let alpha2 = cfg.alpha * cfg.alpha;
    let mut lap = d1.matmul(&d1)?;
    for i in 0..n {
        lap[(i, i)] -= alpha2;
    }
    let lap2 = lap.matmul(&lap)?;
    let y = cfg.points();
    let u: Vec<f64> = y.iter().map(|&y| cfg.profile.eval(y).0).collect();
    let upp: Vec<f64> = y.iter().map(|&y| second_derivative(cfg.profile, y)).collect();
    let visc = C64::new(0.0, cfg.alpha * cfg.re).inv();
    // c (D2 - a^2) phi = U (D2 - a^2) phi - U'' phi - (D2 - a^2)^2 phi / (i a Re)
    let mut am = CMatrix::from_fn(n, n, |i, j| u[i] * lap[(i, j)] - visc * lap2[(i, j)]);
    for i in 0..n {
        am[(i, i)] -= upp[i];
    }
    let mut bm = lap;
    // phi = phi' = 0 at both walls.
    for (r, src) in [(0, None), (1, Some(0)), (m - 1, Some(m)), (m, None)] {
        for j in 0..n {
            am[(r, j)] = match src {
                None => C64::new(if j == r { 1.0 } else { 0.0 }, 0.0),
                Some(k) => d1[(k, j)],
            };
            bm[(r, j)] = C64::new(0.0, 0.0);
        }
    }
    let qz = QzDecomposition::new(&am, &bm, false)?;
    let umax = u.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let bound = 10.0 * umax.max(f64::MIN_POSITIVE);
    let mut ev: Vec<C64> = qz
        .eigenvalues()
        .iter()
        .copied()
        .filter(|c| c.re.is_finite() && c.im.is_finite() && c.norm() <= bound)
        .collect();
    ev.sort_by(stability_order);
    let discarded = n - ev.len();
    Ok((ev, discarded))
}

/// Spectrum at `m` with a convergence check against `m + 16`.
pub fn os_spectrum_collocation(cfg: &CollocationConfig) -> Result<OracleSpectrum> {
    let (eigenvalues, discarded) = os_eigenvalues(cfg)?;
    let (check, _) = os_eigenvalues(&CollocationConfig { m: cfg.m + CHECK_MODES, ..*cfg })?;
    let convergence_gap = match (eigenvalues.first(), check.first()) {
        (Some(a), Some(b)) => (a - b).norm(),
        _ => f64::INFINITY,
    };
    Ok(OracleSpectrum {
        eigenvalues,
        discarded,
        converged: convergence_gap <= CONVERGENCE_TOL,
        convergence_gap,
    })
}

/// Smallest `Re` in the box with a neutral `alpha`, from oracle spectra at
/// `m` modes.
pub fn critical_point(profile: &dyn FlowProfile, sbox: SearchBox, m: usize, opts: &CriticalOptions) -> Result<CriticalOutcome> {
    let mut f = |re: f64, alpha: f64| {
        let (ev, _) = os_eigenvalues(&CollocationConfig { m, re, alpha, profile })?;
        Ok(ev.first().copied())
    };
    locate_critical(&mut f, sbox, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{Couette, Poiseuille, Shifted};
    use std::sync::Arc;

    fn anchor() -> C64 {
        C64::new(0.23752649, 0.00373967)
    }

    #[test]
    fn differentiation_matrix_is_exact_on_cubics() {
        let m = 8;
        let x = chebyshev_points(m);
        let d = chebyshev_matrix(m);
        for i in 0..=m {
            let got: f64 = (0..=m).map(|j| d[i][j] * x[j].powi(3)).sum();
            assert!((got - 3.0 * x[i] * x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn poiseuille_anchor_and_self_convergence() {
        let p = Poiseuille::new(2.0).unwrap();
        let c96 = os_eigenvalues(&CollocationConfig { m: 96, re: 1e4, alpha: 1.0, profile: &p }).unwrap().0[0];
        let c128 = os_eigenvalues(&CollocationConfig { m: 128, re: 1e4, alpha: 1.0, profile: &p }).unwrap().0[0];
        assert!((c96 - c128).norm() < 1e-8, "{c96} vs {c128}");
        assert!((c96 - anchor()).norm() < 1e-8, "{c96}");
    }

    #[test]
    fn convergence_flag() {
        let p = Poiseuille::new(2.0).unwrap();
        let good = os_spectrum_collocation(&CollocationConfig { m: 96, re: 1e4, alpha: 1.0, profile: &p }).unwrap();
        assert!(good.converged);
        let poor = os_spectrum_collocation(&CollocationConfig { m: 16, re: 1e4, alpha: 1.0, profile: &p }).unwrap();
        assert!(!poor.converged);
    }

    #[test]
    fn velocity_shift_shifts_spectrum() {
        let base: Arc<dyn FlowProfile> = Arc::new(Poiseuille::new(2.0).unwrap());
        let kappa = 0.3;
        let shifted = Shifted::new(base.clone(), kappa);
        let a = os_eigenvalues(&CollocationConfig { m: 64, re: 5000.0, alpha: 1.0, profile: base.as_ref() }).unwrap().0;
        let b = os_eigenvalues(&CollocationConfig { m: 64, re: 5000.0, alpha: 1.0, profile: &shifted }).unwrap().0;
        for c in a.iter().take(5) {
            let best = b.iter().map(|d| (d - (c + kappa)).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10, "{c}: {best}");
        }
    }

    #[test]
    fn numerical_second_derivative_matches_analytic() {
        #[derive(Debug)]
        struct Plain(Poiseuille);
        impl FlowProfile for Plain {
            fn name(&self) -> &str {
                "plain"
            }
            fn height(&self) -> f64 {
                self.0.height()
            }
            fn eval(&self, y: f64) -> (f64, f64) {
                self.0.eval(y)
            }
        }
        let p = Plain(Poiseuille::new(2.0).unwrap());
        let c = os_eigenvalues(&CollocationConfig { m: 96, re: 1e4, alpha: 1.0, profile: &p }).unwrap().0[0];
        assert!((c - anchor()).norm() < 1e-7, "{c}");
    }

    #[test]
    fn too_few_modes_rejected() {
        let p = Poiseuille::new(2.0).unwrap();
        assert!(os_eigenvalues(&CollocationConfig { m: 8, re: 1e4, alpha: 1.0, profile: &p }).is_err());
    }

    #[test]
    fn couette_has_no_critical_point() {
        let p = Couette::new(2.0).unwrap();
        let sbox = SearchBox { re_lo: 100.0, re_hi: 1e5, alpha_lo: 0.5, alpha_hi: 2.0 };
        let out = critical_point(&p, sbox, 64, &CriticalOptions::default()).unwrap();
        assert!(matches!(out, CriticalOutcome::NotFound { .. }), "{out:?}");
    }
}
