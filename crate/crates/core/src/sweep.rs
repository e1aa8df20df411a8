//! Exploration of `(Re, alpha)` space: grids, neutral curves, contours of
//! constant amplification and the critical point.

use crate::assembly::StabilityParams;
use crate::solver::{leading_mode, Discretization, ModeSet, Resolve, SolveOptions};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::collections::HashMap;

/// Mesh parameters of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshSpec {
    pub a: f64,
    pub n_elements: usize,
    pub grading: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub re: f64,
    pub alpha: f64,
    /// Leading physical eigenvalue.
    pub c: Option<C64>,
    pub converged: bool,
    /// The solve itself errored (as opposed to no mode passing the filter).
    pub failed: bool,
    pub note: Option<String>,
}

/// Cells stored Re-major: `cells[i_re * alpha.len() + i_alpha]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub re: Vec<f64>,
    pub alpha: Vec<f64>,
    pub cells: Vec<GridCell>,
}

impl SweepGrid {
    pub fn cell(&self, i_re: usize, i_alpha: usize) -> &GridCell {
        &self.cells[i_re * self.alpha.len() + i_alpha]
    }

    pub fn ci(&self, i_re: usize, i_alpha: usize) -> Option<f64> {
        self.cell(i_re, i_alpha).c.map(|c| c.im)
    }
}

fn check_list(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param(name, "empty list"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::param(name, "values must be positive"));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(name, "values must be strictly increasing"));
    }
    Ok(())
}

fn leading_c(disc: &Discretization, re: f64, alpha: f64, options: &SolveOptions) -> Result<Option<C64>> {
    let set = leading_mode(disc, StabilityParams::new(re, alpha)?, options)?;
    Ok(set.leading().map(|m| m.c))
}

pub fn grid_sweep(disc: &Discretization, re: &[f64], alpha: &[f64], options: &SolveOptions) -> Result<SweepGrid> {
    check_list("re", re)?;
    check_list("alpha", alpha)?;
    let pairs: Vec<(f64, f64)> = re.iter().flat_map(|&r| alpha.iter().map(move |&a| (r, a))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(r, a)| match leading_c(disc, r, a, options) {
            Ok(Some(c)) => GridCell { re: r, alpha: a, c: Some(c), converged: true, failed: false, note: None },
            Ok(None) => GridCell {
                re: r,
                alpha: a,
                c: None,
                converged: false,
                failed: false,
                note: Some("no mode passed the filter".into()),
            },
            Err(e) => {
                log::warn!("solve failed at Re = {r}, alpha = {a}: {e}");
                GridCell { re: r, alpha: a, c: None, converged: false, failed: true, note: Some(e.to_string()) }
            }
        })
        .collect();
    Ok(SweepGrid { re: re.to_vec(), alpha: alpha.to_vec(), cells })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeutralConfig {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub tol_neutral: f64,
    pub prescan: usize,
    pub max_iter: usize,
    /// Largest accepted jump of the tracked eigenvalue between steps.
    pub track_jump: f64,
}

impl Default for NeutralConfig {
    fn default() -> Self {
        Self {
            alpha_lo: 0.5,
            alpha_hi: 1.5,
            tol_neutral: 1e-6,
            prescan: 16,
            max_iter: 60,
            track_jump: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeutralPoint {
    pub re: f64,
    pub alpha: f64,
    /// Eigenvalue from a fresh solve at `(re, alpha)`.
    pub c: C64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeutralBracket {
    pub re: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub re: f64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeutralCurve {
    /// Sorted by `re`, then `alpha`.
    pub points: Vec<NeutralPoint>,
    pub brackets: Vec<NeutralBracket>,
    pub diagnostics: Vec<Diagnostic>,
}

impl NeutralCurve {
    pub fn min_re_point(&self) -> Option<&NeutralPoint> {
        self.points.iter().min_by(|a, b| a.re.total_cmp(&b.re))
    }

    pub fn has_points_at(&self, re: f64) -> bool {
        self.points.iter().any(|p| p.re == re)
    }

    fn sort(&mut self) {
        self.points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.alpha.total_cmp(&b.alpha)));
        self.brackets.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.alpha_lo.total_cmp(&b.alpha_lo)));
        self.diagnostics.sort_by(|a, b| a.re.total_cmp(&b.re));
    }
}

/// Eigenvalue nearest to `prev` among the resolved physical modes, or the
/// leading one when nothing is close.
fn tracked(set: &ModeSet, prev: Option<C64>, jump: f64) -> Option<C64> {
    let lead = set.leading()?.c;
    let Some(prev) = prev else {
        return Some(lead);
    };
    let near = set
        .modes
        .iter()
        .map(|m| m.c)
        .min_by(|a, b| (a - prev).norm().total_cmp(&(b - prev).norm()))?;
    Some(if (near - prev).norm() <= jump { near } else { lead })
}

struct LineSolver<'a> {
    disc: &'a Discretization,
    options: SolveOptions,
    re: f64,
    jump: f64,
}

impl LineSolver<'_> {
    fn eval(&self, alpha: f64, prev: Option<C64>) -> Result<Option<C64>> {
        let set = crate::solver::filter_modes(
            self.disc.solve(StabilityParams::new(self.re, alpha)?, &self.options)?,
            &self.options.filter,
        );
        Ok(tracked(&set, prev, self.jump))
    }
}

fn neutral_line(
    disc: &Discretization,
    re: f64,
    cfg: &NeutralConfig,
    options: &SolveOptions,
) -> (Vec<NeutralPoint>, Vec<NeutralBracket>, Vec<Diagnostic>) {
    let mut points = Vec::new();
    let mut brackets = Vec::new();
    let mut diags = Vec::new();
    let diag = |m: String| Diagnostic { re, message: m };
    let line = LineSolver {
        disc,
        options: SolveOptions {
            resolve: Resolve::UntilAccepted(4),
            ..options.clone()
        },
        re,
        jump: cfg.track_jump,
    };
    let n = cfg.prescan.max(2);
    let mut scan: Vec<(f64, Option<C64>)> = Vec::with_capacity(n);
    let mut prev = None;
    for k in 0..n {
        let alpha = cfg.alpha_lo + (cfg.alpha_hi - cfg.alpha_lo) * k as f64 / (n - 1) as f64;
        match line.eval(alpha, prev) {
            Ok(c) => {
                if c.is_some() {
                    prev = c;
                }
                scan.push((alpha, c));
            }
            Err(e) => {
                diags.push(diag(format!("prescan failed at alpha = {alpha}: {e}")));
                scan.push((alpha, None));
            }
        }
    }
    let mut found_change = false;
    for w in scan.windows(2) {
        let ((a0, Some(c0)), (a1, Some(c1))) = (w[0], w[1]) else {
            continue;
        };
        if (c0.im > 0.0) == (c1.im > 0.0) {
            continue;
        }
        found_change = true;
        brackets.push(NeutralBracket { re, alpha_lo: a0, alpha_hi: a1 });
        match bisect_line(&line, (a0, c0), (a1, c1), cfg) {
            Ok(Some((alpha, iterations))) => {
                // Fresh solve, no tracking state.
                match leading_c(disc, re, alpha, options) {
                    Ok(Some(c)) if c.im.abs() <= 2.0 * cfg.tol_neutral => {
                        log::info!("neutral point Re = {re}, alpha = {alpha}, c_r = {}", c.re);
                        points.push(NeutralPoint { re, alpha, c, iterations })
                    }
                    Ok(Some(c)) => diags.push(diag(format!(
                        "point alpha = {alpha} failed verification (c_i = {:e})",
                        c.im
                    ))),
                    Ok(None) => diags.push(diag(format!("no physical mode at alpha = {alpha}"))),
                    Err(e) => diags.push(diag(format!("verification failed at alpha = {alpha}: {e}"))),
                }
            }
            Ok(None) => diags.push(diag(format!(
                "bisection in [{a0}, {a1}] did not reach |c_i| <= {}",
                cfg.tol_neutral
            ))),
            Err(e) => diags.push(diag(format!("bisection in [{a0}, {a1}] failed: {e}"))),
        }
    }
    if !found_change {
        diags.push(diag(format!(
            "no sign change of c_i in [{}, {}]",
            cfg.alpha_lo, cfg.alpha_hi
        )));
    }
    (points, brackets, diags)
}

fn bisect_line(
    line: &LineSolver,
    lo: (f64, C64),
    hi: (f64, C64),
    cfg: &NeutralConfig,
) -> Result<Option<(f64, usize)>> {
    let (mut a_lo, mut c_lo) = lo;
    let (mut a_hi, mut c_hi) = hi;
    for it in 1..=cfg.max_iter {
        debug_assert!((c_lo.im > 0.0) != (c_hi.im > 0.0));
        let mid = 0.5 * (a_lo + a_hi);
        let Some(c) = line.eval(mid, Some(c_lo))? else {
            return Ok(None);
        };
        if c.im.abs() <= cfg.tol_neutral {
            return Ok(Some((mid, it)));
        }
        if (c.im > 0.0) == (c_lo.im > 0.0) {
            a_lo = mid;
            c_lo = c;
        } else {
            a_hi = mid;
            c_hi = c;
        }
    }
    let _ = c_hi;
    Ok(None)
}

/// Neutral points for each `re`: a pre-scan over the `alpha` bracket, then
/// bisection on every sign change of the tracked `c_i`.
pub fn neutral_curve(disc: &Discretization, re: &[f64], cfg: &NeutralConfig, options: &SolveOptions) -> Result<NeutralCurve> {
    check_list("re", re)?;
    if !(cfg.alpha_lo > 0.0 && cfg.alpha_hi > cfg.alpha_lo) {
        return Err(Error::param(
            "alpha bracket",
            format!("need 0 < alpha_lo < alpha_hi, got [{}, {}]", cfg.alpha_lo, cfg.alpha_hi),
        ));
    }
    if !(cfg.tol_neutral > 0.0) {
        return Err(Error::param("tol_neutral", "must be positive"));
    }
    let lines: Vec<_> = re.par_iter().map(|&r| neutral_line(disc, r, cfg, options)).collect();
    let mut curve = NeutralCurve::default();
    for (p, b, d) in lines {
        curve.points.extend(p);
        curve.brackets.extend(b);
        curve.diagnostics.extend(d);
    }
    curve.sort();
    Ok(curve)
}

/// `(Re, alpha, c_r)` along the curve.
pub fn wave_speed_along_curve(curve: &NeutralCurve) -> Vec<(f64, f64, f64)> {
    curve.points.iter().map(|p| (p.re, p.alpha, p.c.re)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub re: f64,
    pub alpha: f64,
    /// Leading eigenvalue at the point.
    pub c: C64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CriticalOutcome {
    Found(CriticalPoint),
    NotFound { reason: String },
}

impl CriticalOutcome {
    pub fn found(&self) -> Option<&CriticalPoint> {
        match self {
            Self::Found(p) => Some(p),
            Self::NotFound { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBox {
    pub re_lo: f64,
    pub re_hi: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalOptions {
    /// Relative width of the final `Re` bracket.
    pub re_rtol: f64,
    /// Absolute accuracy of the maximizing `alpha`.
    pub alpha_tol: f64,
    /// Stop once `|max_alpha c_i| <= ci_tol`.
    pub ci_tol: f64,
    /// Points of the initial `alpha` scan.
    pub scan: usize,
    pub max_outer: usize,
    /// Starting guess for the maximizing `alpha`; skips the first scan.
    pub alpha_hint: Option<f64>,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        Self {
            re_rtol: 1e-7,
            alpha_tol: 1e-6,
            ci_tol: 1e-10,
            scan: 9,
            max_outer: 60,
            alpha_hint: None,
        }
    }
}

/// Growth-rate function `(Re, alpha) -> leading c` used by the searches.
pub trait GrowthRate {
    fn leading(&mut self, re: f64, alpha: f64) -> Result<Option<C64>>;
}

impl<F: FnMut(f64, f64) -> Result<Option<C64>>> GrowthRate for F {
    fn leading(&mut self, re: f64, alpha: f64) -> Result<Option<C64>> {
        self(re, alpha)
    }
}

struct Counted<'a, G: GrowthRate + ?Sized> {
    f: &'a mut G,
    calls: usize,
}

impl<G: GrowthRate + ?Sized> Counted<'_, G> {
    fn ci(&mut self, re: f64, alpha: f64) -> Result<(f64, Option<C64>)> {
        self.calls += 1;
        let c = self.f.leading(re, alpha)?;
        Ok((c.map_or(f64::NEG_INFINITY, |c| c.im), c))
    }
}

/// Maximum of `c_i` over `alpha` at fixed `re`: a scan (or a local probe
/// around `hint`) followed by Brent's parabolic search.
fn max_over_alpha<G: GrowthRate + ?Sized>(
    f: &mut Counted<G>,
    re: f64,
    lo: f64,
    hi: f64,
    hint: Option<f64>,
    opts: &CriticalOptions,
) -> Result<(f64, f64)> {
    if lo == hi {
        return Ok((lo, f.ci(re, lo)?.0));
    }
    let step = (hi - lo) / (opts.scan.max(3) - 1) as f64;
    let (mut a, mut b, mut x, mut fx);
    match hint {
        Some(h) => {
            let h = h.clamp(lo, hi);
            let w = (0.25 * step).max(4.0 * opts.alpha_tol);
            x = h;
            fx = f.ci(re, x)?.0;
            let mut left = (x - w).max(lo);
            let mut right = (x + w).min(hi);
            let mut fl = if left < x { f.ci(re, left)?.0 } else { fx };
            let mut fr = if right > x { f.ci(re, right)?.0 } else { fx };
            // Walk uphill until the maximum is bracketed.
            while fl > fx && left > lo {
                right = x;
                x = left;
                fx = fl;
                left = (x - w).max(lo);
                fl = f.ci(re, left)?.0;
            }
            while fr > fx && right < hi {
                left = x;
                x = right;
                fx = fr;
                right = (x + w).min(hi);
                fr = f.ci(re, right)?.0;
            }
            let _ = (fl, fr);
            a = left;
            b = right;
        }
        None => {
            let n = opts.scan.max(3);
            let mut best = (lo, f64::NEG_INFINITY, 0);
            for k in 0..n {
                let al = lo + step * k as f64;
                let v = f.ci(re, al)?.0;
                if v > best.1 {
                    best = (al, v, k);
                }
            }
            x = best.0;
            fx = best.1;
            a = (x - step).max(lo);
            b = (x + step).min(hi);
        }
    }
    // Brent's method on -c_i within [a, b].
    const CGOLD: f64 = 0.381_966_011_250_105;
    let (mut w, mut v) = (x, x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..100 {
        let xm = 0.5 * (a + b);
        let tol1 = opts.alpha_tol * 0.5 + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fv - fx);
            let mut q = (x - v) * (fw - fx);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f.ci(re, u)?.0;
        // Maximizing: "better" means larger c_i.
        if fu >= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu >= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu >= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, fx))
}

/// Smallest `Re` in the box at which `max_alpha c_i` reaches zero, by
/// regula falsi (Illinois) in `Re` around an inner maximization in `alpha`.
/// Assumes `max_alpha c_i` increases with `Re` inside the box.
pub fn locate_critical<G: GrowthRate + ?Sized>(
    f: &mut G,
    sbox: SearchBox,
    opts: &CriticalOptions,
) -> Result<CriticalOutcome> {
    let SearchBox { re_lo, re_hi, alpha_lo, alpha_hi } = sbox;
    if !(re_lo > 0.0 && re_hi >= re_lo && alpha_lo > 0.0 && alpha_hi >= alpha_lo) {
        return Err(Error::param("search box", format!("{sbox:?} is not a valid box")));
    }
    let mut f = Counted { f, calls: 0 };
    let finish = |f: &mut Counted<G>, re: f64, alpha: f64| -> Result<CriticalOutcome> {
        let (_, c) = f.ci(re, alpha)?;
        match c {
            Some(c) => Ok(CriticalOutcome::Found(CriticalPoint { re, alpha, c, evaluations: f.calls })),
            None => Ok(CriticalOutcome::NotFound {
                reason: format!("no physical mode at Re = {re}, alpha = {alpha}"),
            }),
        }
    };

    let (a_hi, g_hi) = max_over_alpha(&mut f, re_hi, alpha_lo, alpha_hi, opts.alpha_hint, opts)?;
    if g_hi < 0.0 {
        return Ok(CriticalOutcome::NotFound {
            reason: format!("stable throughout the box (max c_i = {g_hi:e} at Re = {re_hi})"),
        });
    }
    if re_lo == re_hi {
        return finish(&mut f, re_hi, a_hi);
    }
    let (a_lo, g_lo) = max_over_alpha(&mut f, re_lo, alpha_lo, alpha_hi, Some(a_hi), opts)?;
    if g_lo >= 0.0 {
        return Ok(CriticalOutcome::NotFound {
            reason: format!("already unstable at Re = {re_lo} (max c_i = {g_lo:e})"),
        });
    }
    if !g_lo.is_finite() {
        return Err(Error::param("search box", format!("no physical mode at Re = {re_lo}")));
    }

    let (mut x0, mut g0, mut al0) = (re_lo, g_lo, a_lo);
    let (mut x1, mut g1, mut al1) = (re_hi, g_hi, a_hi);
    let mut side = 0i32;
    for _ in 0..opts.max_outer {
        if g1.abs() <= opts.ci_tol {
            return finish(&mut f, x1, al1);
        }
        if (x1 - x0).abs() <= opts.re_rtol * x1 {
            break;
        }
        let mut xr = (x0 * g1 - x1 * g0) / (g1 - g0);
        if !(xr > x0.min(x1) && xr < x0.max(x1)) {
            xr = 0.5 * (x0 + x1);
        }
        let hint = al0 + (al1 - al0) * (xr - x0) / (x1 - x0);
        let (ar, gr) = max_over_alpha(&mut f, xr, alpha_lo, alpha_hi, Some(hint), opts)?;
        log::debug!("critical search: Re = {xr}, alpha = {ar}, max c_i = {gr:e} ({} evaluations)", f.calls);
        if gr.abs() <= opts.ci_tol {
            return finish(&mut f, xr, ar);
        }
        if (gr < 0.0) == (g0 < 0.0) {
            x0 = xr;
            g0 = gr;
            al0 = ar;
            if side == -1 {
                g1 *= 0.5;
            }
            side = -1;
        } else {
            x1 = xr;
            g1 = gr;
            al1 = ar;
            if side == 1 {
                g0 *= 0.5;
            }
            side = 1;
        }
    }
    // Bracket collapsed: report the unstable end.
    finish(&mut f, x1, al1)
}

/// Critical point of the FEM problem inside the box.
pub fn critical_point_fem(
    disc: &Discretization,
    sbox: SearchBox,
    opts: &CriticalOptions,
    options: &SolveOptions,
) -> Result<CriticalOutcome> {
    let mut f = |re: f64, alpha: f64| leading_c(disc, re, alpha, options);
    locate_critical(&mut f, sbox, opts)
}

/// Refines the nose of the curve between the last stable and the first
/// unstable `Re` and inserts it as a neutral point.
pub fn refine_critical(
    disc: &Discretization,
    curve: &mut NeutralCurve,
    re: &[f64],
    cfg: &NeutralConfig,
    options: &SolveOptions,
) -> Result<CriticalOutcome> {
    let Some(first) = re.iter().position(|&r| curve.has_points_at(r)) else {
        return Ok(CriticalOutcome::NotFound { reason: "no neutral points to refine".into() });
    };
    if first == 0 {
        return Ok(CriticalOutcome::NotFound {
            reason: format!("unstable already at the smallest Re = {}", re[0]),
        });
    }
    let re_hi = re[first];
    let alphas: Vec<f64> = curve.points.iter().filter(|p| p.re == re_hi).map(|p| p.alpha).collect();
    let lo = alphas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let opts = CriticalOptions {
        re_rtol: 1e-5,
        alpha_tol: 5e-4,
        ci_tol: cfg.tol_neutral,
        alpha_hint: Some(0.5 * (lo + hi)),
        ..Default::default()
    };
    let sbox = SearchBox { re_lo: re[first - 1], re_hi, alpha_lo: cfg.alpha_lo, alpha_hi: cfg.alpha_hi };
    let outcome = critical_point_fem(disc, sbox, &opts, options)?;
    match &outcome {
        CriticalOutcome::Found(p) if p.c.im.abs() <= 2.0 * cfg.tol_neutral => {
            curve.points.push(NeutralPoint { re: p.re, alpha: p.alpha, c: p.c, iterations: p.evaluations });
            curve.sort();
        }
        CriticalOutcome::Found(p) => curve.diagnostics.push(Diagnostic {
            re: p.re,
            message: format!("critical point not neutral to tolerance (c_i = {:e})", p.c.im),
        }),
        CriticalOutcome::NotFound { reason } => curve.diagnostics.push(Diagnostic { re: re_hi, message: reason.clone() }),
    }
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pub level: f64,
    /// Polylines as `(Re, alpha)` vertices.
    pub polylines: Vec<Vec<(f64, f64)>>,
    pub diagnostic: Option<String>,
}

/// Edge key: (0 = along Re at alpha row j, 1 = along alpha at Re column i).
type EdgeKey = (u8, usize, usize);

/// Marching squares on the `c_i` field of the grid.
pub fn amplification_contours(grid: &SweepGrid, levels: &[f64]) -> Vec<Contour> {
    levels.iter().map(|&level| contour_level(grid, level)).collect()
}

fn contour_level(grid: &SweepGrid, level: f64) -> Contour {
    let nr = grid.re.len();
    let na = grid.alpha.len();
    let values: Vec<f64> = grid.cells.iter().filter_map(|c| c.c.map(|c| c.im)).collect();
    let mut out = Contour { level, polylines: Vec::new(), diagnostic: None };
    if values.is_empty() {
        out.diagnostic = Some("no converged cells".into());
        return out;
    }
    if values.iter().all(|&v| v == level) {
        out.diagnostic = Some("degenerate field: every value equals the level".into());
        return out;
    }
    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if level > max || level < min {
        return out;
    }
    if nr < 2 || na < 2 {
        out.diagnostic = Some("grid needs at least 2x2 cells".into());
        return out;
    }
    let point = |key: EdgeKey| -> (f64, f64) {
        let (dir, i, j) = key;
        let (i1, j1) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
        let v0 = grid.ci(i, j).unwrap();
        let v1 = grid.ci(i1, j1).unwrap();
        let t = if v1 != v0 { (level - v0) / (v1 - v0) } else { 0.5 };
        (
            grid.re[i] + t * (grid.re[i1] - grid.re[i]),
            grid.alpha[j] + t * (grid.alpha[j1] - grid.alpha[j]),
        )
    };
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..nr - 1 {
        for j in 0..na - 1 {
            let (Some(v00), Some(v10), Some(v11), Some(v01)) =
                (grid.ci(i, j), grid.ci(i + 1, j), grid.ci(i + 1, j + 1), grid.ci(i, j + 1))
            else {
                continue;
            };
            let bottom = (0u8, i, j);
            let top = (0u8, i, j + 1);
            let left = (1u8, i, j);
            let right = (1u8, i + 1, j);
            let above = |v: f64| v >= level;
            let idx = (above(v00) as u8) | (above(v10) as u8) << 1 | (above(v11) as u8) << 2 | (above(v01) as u8) << 3;
            let centre_above = above(0.25 * (v00 + v10 + v11 + v01));
            match idx {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if centre_above {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if centre_above {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    out.polylines = chain(&segments).into_iter().map(|keys| keys.into_iter().map(point).collect()).collect();
    out
}

/// Joins segments sharing an edge into polylines.
fn chain(segments: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<EdgeKey>> {
    let mut adj: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        adj.entry(*a).or_default().push(s);
        adj.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let other = |s: usize, k: EdgeKey| if segments[s].0 == k { segments[s].1 } else { segments[s].0 };
    // Open polylines start at edges with a single segment; sort for determinism.
    let mut starts: Vec<EdgeKey> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    starts.sort();
    let mut all: Vec<EdgeKey> = adj.keys().copied().collect();
    all.sort();
    starts.extend(all);
    for start in starts {
        let Some(&s0) = adj[&start].iter().find(|&&s| !used[s]) else {
            continue;
        };
        let mut line = vec![start];
        let mut s = s0;
        let mut at = start;
        loop {
            used[s] = true;
            at = other(s, at);
            line.push(at);
            match adj[&at].iter().find(|&&t| !used[t]) {
                Some(&t) => s = t,
                None => break,
            }
        }
        lines.push(line);
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_from(re: Vec<f64>, alpha: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> SweepGrid {
        let cells = re
            .iter()
            .flat_map(|&r| alpha.iter().map(move |&a| (r, a)))
            .map(|(r, a)| GridCell { re: r, alpha: a, c: Some(C64::new(0.3, f(r, a))), converged: true, failed: false, note: None })
            .collect();
        SweepGrid { re, alpha, cells }
    }

    fn lin(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn contour_of_plane_is_a_line() {
        let g = grid_from(lin(6, 1.0, 6.0), lin(5, 0.0, 1.0), |r, a| r + 10.0 * a);
        let c = &amplification_contours(&g, &[7.0])[0];
        assert_eq!(c.polylines.len(), 1);
        for &(r, a) in &c.polylines[0] {
            assert!((r + 10.0 * a - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn level_outside_range_is_empty() {
        let g = grid_from(lin(3, 1.0, 3.0), lin(3, 0.0, 1.0), |r, a| r * a);
        let c = &amplification_contours(&g, &[100.0])[0];
        assert!(c.polylines.is_empty() && c.diagnostic.is_none());
    }

    #[test]
    fn constant_field_is_degenerate() {
        let g = grid_from(lin(3, 1.0, 3.0), lin(3, 0.0, 1.0), |_, _| 0.25);
        let c = &amplification_contours(&g, &[0.25])[0];
        assert!(c.diagnostic.as_deref().unwrap().contains("degenerate"));
    }

    #[test]
    fn closed_contour_around_bump() {
        let g = grid_from(lin(21, -1.0, 1.0), lin(21, -1.0, 1.0), |x, y| 1.0 - x * x - y * y);
        let c = &amplification_contours(&g, &[0.5])[0];
        assert_eq!(c.polylines.len(), 1);
        let line = &c.polylines[0];
        assert_eq!(line.first(), line.last());
        for &(x, y) in line {
            assert!(((x * x + y * y).sqrt() - 0.5f64.sqrt()).abs() < 0.02);
        }
    }

    #[test]
    fn critical_search_on_model_surface() {
        // c_i = (Re - 5000) * 1e-6 - (alpha - 1)^2
        let mut f = |re: f64, a: f64| Ok(Some(C64::new(0.25, (re - 5000.0) * 1e-6 - (a - 1.0) * (a - 1.0))));
        let sbox = SearchBox { re_lo: 3000.0, re_hi: 8000.0, alpha_lo: 0.5, alpha_hi: 1.5 };
        let out = locate_critical(&mut f, sbox, &CriticalOptions::default()).unwrap();
        let p = out.found().unwrap();
        assert!((p.re - 5000.0).abs() < 1e-3, "{p:?}");
        assert!((p.alpha - 1.0).abs() < 1e-4);
    }

    #[test]
    fn critical_search_not_found() {
        let mut f = |_re: f64, _a: f64| Ok(Some(C64::new(0.5, -0.01)));
        let sbox = SearchBox { re_lo: 100.0, re_hi: 1e5, alpha_lo: 0.5, alpha_hi: 2.0 };
        let out = locate_critical(&mut f, sbox, &CriticalOptions::default()).unwrap();
        assert!(matches!(out, CriticalOutcome::NotFound { .. }));
    }

    #[test]
    fn degenerate_box_searches_alpha_only() {
        let mut f = |_re: f64, a: f64| Ok(Some(C64::new(0.5, 0.01 - (a - 1.2) * (a - 1.2))));
        let sbox = SearchBox { re_lo: 6000.0, re_hi: 6000.0, alpha_lo: 0.5, alpha_hi: 2.0 };
        let p = locate_critical(&mut f, sbox, &CriticalOptions::default()).unwrap();
        let p = p.found().unwrap().clone();
        assert_eq!(p.re, 6000.0);
        assert!((p.alpha - 1.2).abs() < 1e-5);
    }

    #[test]
    fn wave_speed_of_single_point() {
        let curve = NeutralCurve {
            points: vec![NeutralPoint { re: 6000.0, alpha: 1.0, c: C64::new(0.26, 0.0), iterations: 3 }],
            ..Default::default()
        };
        assert_eq!(wave_speed_along_curve(&curve), vec![(6000.0, 1.0, 0.26)]);
    }
}
