//! Pressure elimination, eigensolve and mode post-processing.

use crate::assembly::{
    assemble_from_blocks, element_blocks, u_index, v_index, AssembledSystem, PressureClosure, Rotational,
    StabilityParams,
};
use crate::elements::{gauss_rule, lin_shape, quad_shape, ElementMatrices, QuadratureRule};
use crate::linalg::{norm2, CMatrix, HessenbergEig, LuFactor, QzDecomposition, SymmetricFactor};
use crate::mesh::Mesh1D;
use crate::profiles::FlowProfile;
use crate::registry::Registry;
use crate::{Error, Result, C64};
use std::fmt::Debug;
use std::sync::Arc;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `E = K + L G^-1 H` together with `G^-1 H`.
#[derive(Clone, Debug)]
pub struct ReducedPencil {
    pub e: CMatrix,
    pub ginv_h: CMatrix,
}

fn elimination_error(sys: &AssembledSystem, e: Error) -> Error {
    Error::PressureElimination {
        alpha: sys.params.alpha,
        n_elements: sys.mesh.n_elements(),
        source: Box::new(e),
    }
}

pub fn schur_reduce(sys: &AssembledSystem) -> Result<ReducedPencil> {
    let g = SymmetricFactor::new(&sys.g).map_err(|e| elimination_error(sys, e))?;
    let ginv_h = g.solve(&sys.h).map_err(|e| elimination_error(sys, e))?;
    let e = sys.k.add(&sys.l.matmul(&ginv_h)?)?;
    Ok(ReducedPencil { e, ginv_h })
}

/// `B = G^-1 H A`.
pub fn recover_pressure(sys: &AssembledSystem, a: &[C64]) -> Result<Vec<C64>> {
    if a.len() != sys.n_velocity() {
        return Err(Error::Dimension(format!(
            "velocity vector of length {} for {} unknowns",
            a.len(),
            sys.n_velocity()
        )));
    }
    let g = SymmetricFactor::new(&sys.g).map_err(|e| elimination_error(sys, e))?;
    let mut b = sys.h.mul_vec(a);
    g.solve_in_place(&mut b);
    Ok(b)
}

/// Eigenvalues in stability order with on-demand `(A, B)` vectors.
pub trait ModalDecomposition: Send + Sync {
    fn eigenvalues(&self) -> &[C64];

    fn mode_vectors(&self, index: usize) -> Result<(Vec<C64>, Vec<C64>)>;

    fn infinite(&self) -> usize {
        0
    }
}

pub trait EigenPath: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn decompose(&self, sys: &AssembledSystem) -> Result<Box<dyn ModalDecomposition>>;
}

/// Pressure elimination, `S^-1 E` and Hessenberg QR.
#[derive(Clone, Copy, Debug, Default)]
pub struct SchurQr;

/// QZ on `([[K, L], [H, -G]], [[S, 0], [0, 0]])`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CoupledQz;

struct SchurQrModes {
    eig: HessenbergEig,
    ginv_h: CMatrix,
}

impl ModalDecomposition for SchurQrModes {
    fn eigenvalues(&self) -> &[C64] {
        self.eig.eigenvalues()
    }

    fn mode_vectors(&self, index: usize) -> Result<(Vec<C64>, Vec<C64>)> {
        let a = self.eig.eigenvector(index)?;
        let b = self.ginv_h.mul_vec(&a);
        Ok((a, b))
    }
}

impl EigenPath for SchurQr {
    fn name(&self) -> &'static str {
        "schur-qr"
    }

    fn decompose(&self, sys: &AssembledSystem) -> Result<Box<dyn ModalDecomposition>> {
        let ReducedPencil { e, ginv_h } = schur_reduce(sys)?;
        let lu = LuFactor::new(&sys.s)?;
        let reduced = lu.solve(&e)?;
        Ok(Box::new(SchurQrModes {
            eig: HessenbergEig::new(&reduced)?,
            ginv_h,
        }))
    }
}

struct CoupledQzModes {
    qz: QzDecomposition,
    nv: usize,
}

impl ModalDecomposition for CoupledQzModes {
    fn eigenvalues(&self) -> &[C64] {
        self.qz.eigenvalues()
    }

    fn mode_vectors(&self, index: usize) -> Result<(Vec<C64>, Vec<C64>)> {
        let mut x = self.qz.eigenvector(index)?;
        let b = x.split_off(self.nv);
        Ok((x, b))
    }

    fn infinite(&self) -> usize {
        self.qz.infinite()
    }
}

/// The block pencil of the unreduced problem.
pub fn coupled_pencil(sys: &AssembledSystem) -> (CMatrix, CMatrix) {
    let nv = sys.n_velocity();
    let np = sys.n_pressure();
    let mut a = CMatrix::zeros(nv + np, nv + np);
    a.set_block(0, 0, &sys.k);
    a.set_block(0, nv, &sys.l);
    a.set_block(nv, 0, &sys.h);
    a.set_block(nv, nv, &sys.g.scaled(C64::new(-1.0, 0.0)));
    let mut b = CMatrix::zeros(nv + np, nv + np);
    b.set_block(0, 0, &sys.s);
    (a, b)
}

impl EigenPath for CoupledQz {
    fn name(&self) -> &'static str {
        "coupled-qz"
    }

    fn decompose(&self, sys: &AssembledSystem) -> Result<Box<dyn ModalDecomposition>> {
        let (a, b) = coupled_pencil(sys);
        Ok(Box::new(CoupledQzModes {
            qz: QzDecomposition::new(&a, &b, true)?,
            nv: sys.n_velocity(),
        }))
    }
}

pub static PATHS: Registry<&'static dyn EigenPath> =
    Registry::new("solver path", &[("schur-qr", &SchurQr), ("coupled-qz", &CoupledQz)]);

pub fn path_by_name(name: &str) -> Result<&'static dyn EigenPath> {
    PATHS.get(name).copied()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterCriteria {
    /// Largest accepted relative residual of either equation.
    pub residual_tol: f64,
    /// Allowed excursion of `c_r` beyond `[min U, max U]`.
    pub margin: f64,
    /// Largest accepted relative discrete divergence.
    pub divergence_tol: f64,
}

impl Default for FilterCriteria {
    fn default() -> Self {
        Self {
            residual_tol: 1e-6,
            margin: 0.5,
            divergence_tol: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeFlags {
    pub residual_ok: bool,
    pub phase_speed_ok: bool,
    pub divergence_ok: bool,
}

impl ModeFlags {
    pub fn physical(&self) -> bool {
        self.residual_ok && self.phase_speed_ok && self.divergence_ok
    }

    pub fn reasons(&self) -> Vec<&'static str> {
        let mut r = Vec::new();
        if !self.residual_ok {
            r.push("residual");
        }
        if !self.phase_speed_ok {
            r.push("phase-speed");
        }
        if !self.divergence_ok {
            r.push("divergence");
        }
        r
    }
}

#[derive(Clone, Debug)]
pub struct Mode {
    /// Complex phase speed `c = c_r + i c_i`.
    pub c: C64,
    /// Interleaved `(u_1, v_1, ..., u_{2N+1}, v_{2N+1})`.
    pub velocity: Vec<C64>,
    /// `(p_0, ..., p_{N+1})`.
    pub pressure: Vec<C64>,
    /// `||K A + L B - c S A|| / (||K|| ||A|| + ||L|| ||B|| + |c| ||S|| ||A||)`.
    pub momentum_residual: f64,
    /// `||G B - H A|| / (||G|| ||B|| + ||H|| ||A||)`.
    pub pressure_residual: f64,
    /// `||i alpha u_h + v_h'|| / ||(alpha u_h, v_h')||` in `L^2(0, a)`.
    pub divergence: f64,
    pub flags: ModeFlags,
}

impl Mode {
    pub fn residual(&self) -> f64 {
        self.momentum_residual.max(self.pressure_residual)
    }

    pub fn u(&self, g: usize) -> C64 {
        self.velocity[u_index(g)]
    }

    pub fn v(&self, g: usize) -> C64 {
        self.velocity[v_index(g)]
    }
}

/// Both residuals of the coupled equations for `(c, A, B)`.
pub fn mode_residuals(sys: &AssembledSystem, c: C64, a: &[C64], b: &[C64]) -> (f64, f64) {
    let ka = sys.k.mul_vec(a);
    let lb = sys.l.mul_vec(b);
    let sa = sys.s.mul_vec(a);
    let r1: Vec<C64> = ka.iter().zip(&lb).zip(&sa).map(|((x, y), z)| x + y - c * z).collect();
    let na = norm2(a);
    let nb = norm2(b);
    let d1 = sys.k.norm_fro() * na + sys.l.norm_fro() * nb + c.norm() * sys.s.norm_fro() * na;
    let gb = sys.g.mul_vec(b);
    let ha = sys.h.mul_vec(a);
    let r2: Vec<C64> = gb.iter().zip(&ha).map(|(x, y)| x - y).collect();
    let d2 = sys.g.norm_fro() * nb + sys.h.norm_fro() * na;
    let rel = |r: f64, d: f64| if d > 0.0 { r / d } else { r };
    (rel(norm2(&r1), d1), rel(norm2(&r2), d2))
}

/// Local `(u, v)` coefficients of element `j`, zero at wall nodes.
fn local_velocity(mesh: &Mesh1D, velocity: &[C64], j: usize) -> [(C64, C64); 3] {
    local_row(&mesh.velocity_connectivity().0[j], velocity)
}

fn local_row(row: &[usize; 3], velocity: &[C64]) -> [(C64, C64); 3] {
    row.map(|g| {
        if g == 0 {
            (ZERO, ZERO)
        } else {
            (velocity[u_index(g)], velocity[v_index(g)])
        }
    })
}

/// `(||i alpha u_h + v_h'||, ||(alpha u_h, v_h')||)` in `L^2(0, a)`.
pub fn divergence_norms(mesh: &Mesh1D, alpha: f64, velocity: &[C64]) -> (f64, f64) {
    let rule = gauss_rule(4).expect("4-point rule");
    let l1 = mesh.velocity_connectivity();
    let mut div = 0.0;
    let mut reference = 0.0;
    for (j, row) in l1.rows().iter().enumerate() {
        let h = mesh.h(j);
        let coef = local_row(row, velocity);
        for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
            let s = quad_shape(xi);
            let ds = s.dy(h);
            let mut u = ZERO;
            let mut dv = ZERO;
            for n in 0..3 {
                u += coef[n].0 * s.values[n];
                dv += coef[n].1 * ds[n];
            }
            let d = C64::new(0.0, alpha) * u + dv;
            div += w * h * d.norm_sqr();
            reference += w * h * (alpha * alpha * u.norm_sqr() + dv.norm_sqr());
        }
    }
    (div.sqrt(), reference.sqrt())
}

/// `(u, v, p)` of a mode at `y`.
pub fn evaluate_mode(mode: &Mode, mesh: &Mesh1D, y: f64) -> Result<(C64, C64, C64)> {
    let (j, xi) = mesh.locate(y)?;
    let coef = local_velocity(mesh, &mode.velocity, j);
    let s = quad_shape(xi);
    let mut u = ZERO;
    let mut v = ZERO;
    for n in 0..3 {
        u += coef[n].0 * s.values[n];
        v += coef[n].1 * s.values[n];
    }
    let ps = lin_shape(xi);
    let p = mode.pressure[j] * ps.values[0] + mode.pressure[j + 1] * ps.values[1];
    Ok((u, v, p))
}

/// Scale so that the largest `|v|` over velocity nodes is 1 with zero
/// phase; `u` takes over when `v` vanishes.
fn normalize_mode(a: &mut [C64], b: &mut [C64]) {
    let pick = |offset: usize| {
        (offset..a.len())
            .step_by(2)
            .fold(None, |best: Option<usize>, i| match best {
                Some(j) if a[j].norm() >= a[i].norm() => Some(j),
                _ => Some(i),
            })
            .filter(|&i| a[i].norm() > 0.0)
    };
    let Some(k) = pick(1).or_else(|| pick(0)) else {
        return;
    };
    let f = a[k].inv();
    a.iter_mut().for_each(|z| *z *= f);
    b.iter_mut().for_each(|z| *z *= f);
    a[k] = C64::new(1.0, 0.0);
}

#[derive(Clone, Debug)]
pub struct Provenance {
    pub n_elements: usize,
    pub a: f64,
    pub grading: f64,
    pub params: StabilityParams,
    pub profile: String,
    pub closure: &'static str,
    pub path: &'static str,
}

#[derive(Clone, Debug)]
pub struct RejectedMode {
    pub mode: Mode,
    pub reasons: Vec<&'static str>,
}

#[derive(Clone, Debug)]
pub struct ModeSet {
    /// Sorted by descending `c_i`.
    pub modes: Vec<Mode>,
    /// Modes moved out by [`filter_modes`].
    pub rejected: Vec<RejectedMode>,
    /// Eigenvalues whose vectors were not computed (early stop).
    pub unresolved: Vec<C64>,
    /// Infinite eigenvalues of the coupled pencil (QZ path only).
    pub infinite: usize,
    /// `(min U, max U)`.
    pub u_range: (f64, f64),
    pub provenance: Provenance,
}

impl ModeSet {
    pub fn leading(&self) -> Option<&Mode> {
        self.modes.first()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.modes.iter().map(|m| m.c).collect()
    }

    /// Every eigenvalue the solve produced, kept or not.
    pub fn all_eigenvalues(&self) -> Vec<C64> {
        let mut all: Vec<C64> = self
            .modes
            .iter()
            .map(|m| m.c)
            .chain(self.rejected.iter().map(|r| r.mode.c))
            .chain(self.unresolved.iter().copied())
            .collect();
        all.sort_by(crate::linalg::stability_order);
        all
    }
}

/// Moves modes failing any criterion into `rejected`.
pub fn filter_modes(mut modes: ModeSet, criteria: &FilterCriteria) -> ModeSet {
    let (lo, hi) = modes.u_range;
    let mut kept = Vec::with_capacity(modes.modes.len());
    for mut m in modes.modes.drain(..) {
        m.flags = flags_for(&m, criteria, lo, hi);
        if m.flags.physical() {
            kept.push(m);
        } else {
            let reasons = m.flags.reasons();
            modes.rejected.push(RejectedMode { mode: m, reasons });
        }
    }
    modes.modes = kept;
    modes
}

fn flags_for(m: &Mode, criteria: &FilterCriteria, lo: f64, hi: f64) -> ModeFlags {
    ModeFlags {
        residual_ok: m.residual() <= criteria.residual_tol,
        phase_speed_ok: m.c.re >= lo - criteria.margin && m.c.re <= hi + criteria.margin,
        divergence_ok: m.divergence <= criteria.divergence_tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolve {
    /// Vectors for every eigenvalue.
    All,
    /// Walk the spectrum in stability order and stop after this many
    /// modes pass the filter criteria.
    UntilAccepted(usize),
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub path: &'static dyn EigenPath,
    pub closure: &'static dyn PressureClosure,
    pub quad_points: usize,
    pub filter: FilterCriteria,
    pub resolve: Resolve,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            path: &SchurQr,
            closure: &Rotational,
            quad_points: 5,
            filter: FilterCriteria::default(),
            resolve: Resolve::All,
        }
    }
}

/// Mesh, profile and cached element blocks; reusable across `(Re, alpha)`.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh1D,
    pub profile: Arc<dyn FlowProfile>,
    pub rule: QuadratureRule,
    blocks: Vec<ElementMatrices>,
    u_range: (f64, f64),
}

impl Discretization {
    pub fn new(mesh: Mesh1D, profile: Arc<dyn FlowProfile>, quad_points: usize) -> Result<Self> {
        let rule = gauss_rule(quad_points)?;
        let blocks = element_blocks(&mesh, profile.as_ref(), &rule)?;
        let a = mesh.a();
        let (lo, hi) = (0..=1000).map(|i| profile.eval(a * i as f64 / 1000.0).0).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), u| (lo.min(u), hi.max(u)),
        );
        Ok(Self {
            mesh,
            profile,
            rule,
            blocks,
            u_range: (lo, hi),
        })
    }

    pub fn assemble(&self, params: StabilityParams, closure: &'static dyn PressureClosure) -> AssembledSystem {
        assemble_from_blocks(&self.mesh, &self.blocks, self.profile.as_ref(), params, closure)
    }

    pub fn solve(&self, params: StabilityParams, options: &SolveOptions) -> Result<ModeSet> {
        let sys = self.assemble(params, options.closure);
        solve_assembled(&sys, self.u_range, options)
    }

    pub fn u_range(&self) -> (f64, f64) {
        self.u_range
    }
}

/// Full pipeline; returns every mode with its flags, unfiltered.
pub fn solve_stability(
    mesh: &Mesh1D,
    profile: Arc<dyn FlowProfile>,
    params: StabilityParams,
    options: &SolveOptions,
) -> Result<ModeSet> {
    Discretization::new(mesh.clone(), profile, options.quad_points)?.solve(params, options)
}

pub fn solve_assembled(sys: &AssembledSystem, u_range: (f64, f64), options: &SolveOptions) -> Result<ModeSet> {
    let decomposition = options.path.decompose(sys)?;
    let values = decomposition.eigenvalues().to_vec();
    let mut modes = Vec::new();
    let mut unresolved = Vec::new();
    let mut accepted = 0;
    for (i, &c) in values.iter().enumerate() {
        if let Resolve::UntilAccepted(k) = options.resolve {
            if accepted >= k {
                unresolved.push(c);
                continue;
            }
        }
        let (mut a, mut b) = decomposition.mode_vectors(i)?;
        normalize_mode(&mut a, &mut b);
        let (r1, r2) = mode_residuals(sys, c, &a, &b);
        let (div, reference) = divergence_norms(&sys.mesh, sys.params.alpha, &a);
        let mut mode = Mode {
            c,
            velocity: a,
            pressure: b,
            momentum_residual: r1,
            pressure_residual: r2,
            divergence: if reference > 0.0 { div / reference } else { 0.0 },
            flags: ModeFlags {
                residual_ok: false,
                phase_speed_ok: false,
                divergence_ok: false,
            },
        };
        mode.flags = flags_for(&mode, &options.filter, u_range.0, u_range.1);
        if mode.flags.physical() {
            accepted += 1;
        }
        modes.push(mode);
    }
    Ok(ModeSet {
        modes,
        rejected: Vec::new(),
        unresolved,
        infinite: decomposition.infinite(),
        u_range,
        provenance: Provenance {
            n_elements: sys.mesh.n_elements(),
            a: sys.mesh.a(),
            grading: sys.mesh.grading(),
            params: sys.params,
            profile: sys.profile_name.clone(),
            closure: sys.closure,
            path: options.path.name(),
        },
    })
}

/// Leading physical mode only: vectors are computed down the spectrum
/// until one mode passes the filter.
pub fn leading_mode(disc: &Discretization, params: StabilityParams, options: &SolveOptions) -> Result<ModeSet> {
    let opts = SolveOptions {
        resolve: Resolve::UntilAccepted(1),
        ..options.clone()
    };
    let filter = opts.filter;
    Ok(filter_modes(disc.solve(params, &opts)?, &filter))
}
