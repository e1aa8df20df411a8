//! Global matrices of the discrete problem
//!
//! ```text
//! K A + L B = c S A
//!       G B = H A
//! ```
//!
//! with `A = (u_1, v_1, ..., u_{2N+1}, v_{2N+1})` the velocity coefficients
//! and `B = (p_0, ..., p_{N+1})` the pressure coefficients.
//!
//! The momentum rows, `L` and `G` are fixed. The source side `H` of the
//! pressure equation depends on the wall closure, see [`PressureClosure`].

use crate::elements::{element_integrals, ElementMatrices, QuadratureRule};
use crate::linalg::CMatrix;
use crate::mesh::Mesh1D;
use crate::profiles::FlowProfile;
use crate::registry::Registry;
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::fmt::Debug;
use std::io::Write;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityParams {
    pub re: f64,
    pub alpha: f64,
}

impl StabilityParams {
    pub fn new(re: f64, alpha: f64) -> Result<Self> {
        if !(re.is_finite() && re > 0.0) {
            return Err(Error::param("re", format!("must be positive, got {re}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
        }
        Ok(Self { re, alpha })
    }
}

/// What a closure sees besides the element blocks.
#[derive(Clone, Copy, Debug)]
pub struct ClosureContext {
    pub params: StabilityParams,
    /// `U(0)`.
    pub u_wall: f64,
}

/// Local source block `[l][n][component]`, `component` 0 for `u`, 1 for `v`.
pub type LocalSource = [[[C64; 2]; 3]; 2];

/// Right-hand side of the pressure equation.
pub trait PressureClosure: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Interior contribution of one element.
    fn element_source(&self, e: &ElementMatrices, ctx: &ClosureContext) -> LocalSource;

    /// Wall rows as `(pressure row, matrix column, value)` triples.
    fn wall_terms(&self, mesh: &Mesh1D, params: &StabilityParams) -> Vec<(usize, usize, C64)>;
}

/// The source `-2 i alpha U' v` with the normal viscous Neumann data
/// `p' = Re^-1 v''` at both walls.
#[derive(Clone, Copy, Debug, Default)]
pub struct NormalViscous;

/// Source `-2 i alpha U' v - i alpha (U - U(0)) (i alpha u + v')` with the
/// rotational wall flux `p' = -i alpha Re^-1 u'`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Rotational;

impl PressureClosure for NormalViscous {
    fn name(&self) -> &'static str {
        "normal-viscous"
    }

    fn element_source(&self, e: &ElementMatrices, ctx: &ClosureContext) -> LocalSource {
        let alpha = ctx.params.alpha;
        let mut out = LocalSource::default();
        for (l, row) in out.iter_mut().enumerate() {
            for (n, cell) in row.iter_mut().enumerate() {
                cell[1] = -2.0 * alpha * I * e.d[n][l];
            }
        }
        out
    }

    fn wall_terms(&self, mesh: &Mesh1D, params: &StabilityParams) -> Vec<(usize, usize, C64)> {
        wall_pressure_flux_terms(mesh, params.re)
            .into_iter()
            .map(|(r, c, v)| (r, c, C64::new(v, 0.0)))
            .collect()
    }
}

impl PressureClosure for Rotational {
    fn name(&self) -> &'static str {
        "rotational"
    }

    fn element_source(&self, e: &ElementMatrices, ctx: &ClosureContext) -> LocalSource {
        let alpha = ctx.params.alpha;
        let u0 = ctx.u_wall;
        let mut out = LocalSource::default();
        for (l, row) in out.iter_mut().enumerate() {
            for (n, cell) in row.iter_mut().enumerate() {
                let ub = e.ub[l][n] - u0 * e.b[l][n];
                let uc = e.uc[l][n] - u0 * e.c[l][n];
                cell[0] = C64::new(alpha * alpha * ub, 0.0);
                cell[1] = -alpha * I * (2.0 * e.d[n][l] + uc);
            }
        }
        out
    }

    fn wall_terms(&self, mesh: &Mesh1D, params: &StabilityParams) -> Vec<(usize, usize, C64)> {
        let f = params.alpha / params.re * I;
        let ne = mesh.n_elements();
        let l1 = mesh.velocity_connectivity();
        let mut out = Vec::new();
        let h0 = mesh.h(0);
        for (k, d) in [-3.0, 4.0, -1.0].into_iter().enumerate() {
            let g = l1.0[0][k];
            if g != 0 {
                out.push((0, u_index(g), -f * (d / h0)));
            }
        }
        let hn = mesh.h(ne - 1);
        for (k, d) in [1.0, -4.0, 3.0].into_iter().enumerate() {
            let g = l1.0[ne - 1][k];
            if g != 0 {
                out.push((ne, u_index(g), f * (d / hn)));
            }
        }
        out
    }
}

pub static CLOSURES: Registry<&'static dyn PressureClosure> = Registry::new(
    "pressure closure",
    &[("rotational", &Rotational), ("normal-viscous", &NormalViscous)],
);

pub fn closure_by_name(name: &str) -> Result<&'static dyn PressureClosure> {
    CLOSURES.get(name).copied()
}

/// Matrix index of `u` at free velocity node `g` (1-based).
pub fn u_index(g: usize) -> usize {
    2 * (g - 1)
}

/// Matrix index of `v` at free velocity node `g` (1-based).
pub fn v_index(g: usize) -> usize {
    2 * (g - 1) + 1
}

/// Normal viscous wall terms `+Re^-1 phi'' v` in row 0 and `-Re^-1 phi'' v`
/// in row `N+1`, as `(row, column, value)`.
pub fn wall_pressure_flux_terms(mesh: &Mesh1D, re: f64) -> Vec<(usize, usize, f64)> {
    let ne = mesh.n_elements();
    let l1 = mesh.velocity_connectivity();
    let second = [4.0, -8.0, 4.0];
    let mut out = Vec::new();
    let h0 = mesh.h(0);
    for (k, d2) in second.iter().enumerate() {
        let g = l1.0[0][k];
        if g != 0 {
            out.push((0, v_index(g), d2 / (h0 * h0) / re));
        }
    }
    let hn = mesh.h(ne - 1);
    for (k, d2) in second.iter().enumerate() {
        let g = l1.0[ne - 1][k];
        if g != 0 {
            out.push((ne, v_index(g), -d2 / (hn * hn) / re));
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub k: CMatrix,
    pub s: CMatrix,
    pub l: CMatrix,
    pub g: CMatrix,
    pub h: CMatrix,
    pub params: StabilityParams,
    pub mesh: Mesh1D,
    pub profile_name: String,
    pub closure: &'static str,
}

impl AssembledSystem {
    /// `2(2N+1)`.
    pub fn n_velocity(&self) -> usize {
        self.k.rows()
    }

    /// `N+2`.
    pub fn n_pressure(&self) -> usize {
        self.g.rows()
    }

    /// Writes every matrix as `row,col,re,im` CSV, one file per name.
    pub fn dump(&self, mut open: impl FnMut(&str) -> std::io::Result<Box<dyn Write>>) -> std::io::Result<()> {
        for (name, m) in [("K", &self.k), ("S", &self.s), ("L", &self.l), ("G", &self.g), ("H", &self.h)] {
            let mut w = open(name)?;
            write_matrix_csv(m, &mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

pub fn write_matrix_csv(m: &CMatrix, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "row,col,re,im")?;
    for j in 0..m.cols() {
        for (i, z) in m.col(j).iter().enumerate() {
            if z.re != 0.0 || z.im != 0.0 {
                writeln!(w, "{i},{j},{:.16e},{:.16e}", z.re, z.im)?;
            }
        }
    }
    Ok(())
}

/// Assembly with the default closure.
pub fn assemble_system(
    mesh: &Mesh1D,
    profile: &dyn FlowProfile,
    params: StabilityParams,
    rule: &QuadratureRule,
) -> Result<AssembledSystem> {
    assemble_with(mesh, profile, params, rule, &Rotational)
}

/// Per-element integral blocks for the whole mesh, in element order.
pub fn element_blocks(mesh: &Mesh1D, profile: &dyn FlowProfile, rule: &QuadratureRule) -> Result<Vec<ElementMatrices>> {
    if (profile.height() - mesh.a()).abs() > 1e-12 * mesh.a() {
        return Err(Error::param(
            "profile",
            format!("height {} does not match mesh height {}", profile.height(), mesh.a()),
        ));
    }
    if let Some(deg) = profile.polynomial_degree() {
        if rule.exactness() < 4 + deg {
            log::warn!(
                "{}-point rule is exact to degree {}, integrands reach degree {}",
                rule.len(),
                rule.exactness(),
                4 + deg
            );
        }
    }
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|j| element_integrals(mesh.element(j), profile, rule))
        .collect()
}

pub fn assemble_with(
    mesh: &Mesh1D,
    profile: &dyn FlowProfile,
    params: StabilityParams,
    rule: &QuadratureRule,
    closure: &'static dyn PressureClosure,
) -> Result<AssembledSystem> {
    let blocks = element_blocks(mesh, profile, rule)?;
    Ok(assemble_from_blocks(mesh, &blocks, profile, params, closure))
}

/// Scatter cached element blocks into the global matrices.
pub fn assemble_from_blocks(
    mesh: &Mesh1D,
    blocks: &[ElementMatrices],
    profile: &dyn FlowProfile,
    params: StabilityParams,
    closure: &'static dyn PressureClosure,
) -> AssembledSystem {
    let nv = 2 * mesh.n_velocity_nodes();
    let np = mesh.n_pressure_nodes();
    let StabilityParams { re, alpha } = params;
    let mut k = CMatrix::zeros(nv, nv);
    let mut s = CMatrix::zeros(nv, nv);
    let mut l = CMatrix::zeros(nv, np);
    let mut g = CMatrix::zeros(np, np);
    let mut h = CMatrix::zeros(np, nv);
    let ctx = ClosureContext { params, u_wall: profile.eval(0.0).0 };

    let visc = -I / (alpha * re);
    let damp = -alpha / re * I;
    let coupling = -I / alpha;
    let l1 = mesh.velocity_connectivity();
    let l2 = mesh.pressure_connectivity();
    for ((e, vrow), prow) in blocks.iter().zip(l1.rows()).zip(l2.rows()) {
        for (kl, &gk) in vrow.iter().enumerate() {
            if gk == 0 {
                continue;
            }
            let (ru, rv) = (u_index(gk), v_index(gk));
            for (nl, &gn) in vrow.iter().enumerate() {
                if gn == 0 {
                    continue;
                }
                let (cu, cv) = (u_index(gn), v_index(gn));
                let blk = damp * e.m[nl][kl] + e.mu[nl][kl] + visc * e.a[nl][kl];
                k[(ru, cu)] += blk;
                k[(rv, cv)] += blk;
                k[(ru, cv)] += coupling * e.mdu[nl][kl];
                s[(ru, cu)] += e.m[nl][kl];
                s[(rv, cv)] += e.m[nl][kl];
            }
            for (ml, &pm) in prow.iter().enumerate() {
                l[(ru, pm)] += e.b[ml][kl];
                l[(rv, pm)] += I / alpha * e.c[ml][kl];
            }
        }
        for (ll, &pl) in prow.iter().enumerate() {
            for (ml, &pm) in prow.iter().enumerate() {
                g[(pl, pm)] += -alpha * alpha * e.mp[ml][ll] - e.ap[ml][ll];
            }
        }
        let src = closure.element_source(e, &ctx);
        for (ll, &pl) in prow.iter().enumerate() {
            for (nl, &gn) in vrow.iter().enumerate() {
                if gn == 0 {
                    continue;
                }
                h[(pl, u_index(gn))] += src[ll][nl][0];
                h[(pl, v_index(gn))] += src[ll][nl][1];
            }
        }
    }
    for (row, col, val) in closure.wall_terms(mesh, &params) {
        h[(row, col)] += val;
    }
    AssembledSystem {
        k,
        s,
        l,
        g,
        h,
        params,
        mesh: mesh.clone(),
        profile_name: profile.name().to_string(),
        closure: closure.name(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::gauss_rule;
    use crate::mesh::build_mesh;
    use crate::profiles::{Couette, Poiseuille};

    fn system(ne: usize, closure: &'static dyn PressureClosure) -> AssembledSystem {
        let mesh = build_mesh(2.0, ne, 1.0).unwrap();
        let p = Poiseuille::new(2.0).unwrap();
        assemble_with(&mesh, &p, StabilityParams::new(100.0, 1.0).unwrap(), &gauss_rule(5).unwrap(), closure).unwrap()
    }

    #[test]
    fn dimensions() {
        let s = system(2, &Rotational);
        assert_eq!((s.k.rows(), s.k.cols()), (6, 6));
        assert_eq!((s.s.rows(), s.s.cols()), (6, 6));
        assert_eq!((s.l.rows(), s.l.cols()), (6, 3));
        assert_eq!((s.g.rows(), s.g.cols()), (3, 3));
        assert_eq!((s.h.rows(), s.h.cols()), (3, 6));
    }

    #[test]
    fn single_element_g() {
        let mesh = build_mesh(1.0, 1, 1.0).unwrap();
        let p = Couette::new(1.0).unwrap();
        let s = assemble_system(&mesh, &p, StabilityParams::new(10.0, 1.0).unwrap(), &gauss_rule(5).unwrap()).unwrap();
        let want = [[-4.0 / 3.0, 5.0 / 6.0], [5.0 / 6.0, -4.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.g[(i, j)] - C64::new(want[i][j], 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn literal_wall_terms() {
        let mesh = build_mesh(2.0, 4, 1.0).unwrap();
        let re = 250.0;
        let h = 0.5;
        let t = wall_pressure_flux_terms(&mesh, re);
        assert!(t.contains(&(0, v_index(1), -8.0 / (h * h) / re)));
        assert!(t.contains(&(0, v_index(2), 4.0 / (h * h) / re)));
        assert!(t.contains(&(4, v_index(6), -4.0 / (h * h) / re)));
        assert!(t.contains(&(4, v_index(7), 8.0 / (h * h) / re)));
        assert_eq!(t.len(), 4);
        let far = wall_pressure_flux_terms(&mesh, 1e300);
        assert!(far.iter().all(|(_, _, v)| v.abs() < 1e-290));
    }

    #[test]
    fn zero_flow_leaves_only_wall_terms() {
        #[derive(Debug)]
        struct Still;
        impl FlowProfile for Still {
            fn name(&self) -> &str {
                "still"
            }
            fn height(&self) -> f64 {
                2.0
            }
            fn eval(&self, _y: f64) -> (f64, f64) {
                (0.0, 0.0)
            }
        }
        let mesh = build_mesh(2.0, 5, 1.0).unwrap();
        let params = StabilityParams::new(300.0, 1.3).unwrap();
        for closure in [&Rotational as &'static dyn PressureClosure, &NormalViscous] {
            let s = assemble_with(&mesh, &Still, params, &gauss_rule(5).unwrap(), closure).unwrap();
            let mut expect = CMatrix::zeros(s.h.rows(), s.h.cols());
            for (r, c, v) in closure.wall_terms(&mesh, &params) {
                expect[(r, c)] += v;
            }
            assert!(s.h.sub(&expect).unwrap().max_abs() < 1e-15, "{}", closure.name());
        }
    }

    #[test]
    fn g_is_symmetric_and_real() {
        let s = system(7, &Rotational);
        let g = &s.g;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                assert_eq!(g[(i, j)].im, 0.0);
                assert!((g[(i, j)] - g[(j, i)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn mass_matrix_has_no_uv_coupling() {
        let s = system(4, &Rotational);
        for i in 0..s.s.rows() {
            for j in 0..s.s.cols() {
                if i % 2 != j % 2 {
                    assert_eq!(s.s[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn closure_registry() {
        assert_eq!(closure_by_name("rotational").unwrap().name(), "rotational");
        assert_eq!(closure_by_name("Normal-Viscous").unwrap().name(), "normal-viscous");
        assert!(closure_by_name("dirichlet").is_err());
    }

    #[test]
    fn parameters_validated() {
        assert!(StabilityParams::new(0.0, 1.0).is_err());
        assert!(StabilityParams::new(1.0, -1.0).is_err());
        assert!(StabilityParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn matrix_dump_format() {
        let m = CMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, -2.5]]);
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "row,col,re,im");
        assert_eq!(text.lines().count(), 3);
    }
}
