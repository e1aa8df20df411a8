//! Local shape functions, Gauss rules and per-element integral blocks.
//!
//! Quadratic velocity basis on `xi in [0, 1]`:
//! `phi1 = (1-xi)(1-2xi)`, `phi2 = 4xi(1-xi)`, `phi3 = xi(2xi-1)`.
//! Affine pressure basis: `psi1 = 1-xi`, `psi2 = xi`.

use crate::profiles::FlowProfile;
use crate::{Error, Result};

/// Shape function values and `xi`-derivatives at one local coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeSet<const K: usize> {
    pub values: [f64; K],
    pub d_xi: [f64; K],
    pub d2_xi: [f64; K],
}

impl<const K: usize> ShapeSet<K> {
    /// First derivatives in `y` on an element of length `h`.
    pub fn dy(&self, h: f64) -> [f64; K] {
        self.d_xi.map(|d| d / h)
    }

    pub fn d2y(&self, h: f64) -> [f64; K] {
        self.d2_xi.map(|d| d / (h * h))
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&xi) {
        Ok(())
    } else {
        Err(Error::Domain { value: xi, lo: 0.0, hi: 1.0 })
    }
}

pub fn quad_shape_eval(xi: f64) -> Result<ShapeSet<3>> {
    check_xi(xi)?;
    Ok(quad_shape(xi))
}

pub fn lin_shape_eval(xi: f64) -> Result<ShapeSet<2>> {
    check_xi(xi)?;
    Ok(lin_shape(xi))
}

#[inline]
pub(crate) fn quad_shape(xi: f64) -> ShapeSet<3> {
    ShapeSet {
        values: [(1.0 - xi) * (1.0 - 2.0 * xi), 4.0 * xi * (1.0 - xi), xi * (2.0 * xi - 1.0)],
        d_xi: [4.0 * xi - 3.0, 4.0 - 8.0 * xi, 4.0 * xi - 1.0],
        d2_xi: [4.0, -8.0, 4.0],
    }
}

#[inline]
pub(crate) fn lin_shape(xi: f64) -> ShapeSet<2> {
    ShapeSet {
        values: [1.0 - xi, xi],
        d_xi: [-1.0, 1.0],
        d2_xi: [0.0, 0.0],
    }
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        2 * self.points.len() - 1
    }
}

pub const MAX_GAUSS_POINTS: usize = 8;

pub fn gauss_rule(npts: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_GAUSS_POINTS).contains(&npts) {
        return Err(Error::param(
            "npts",
            format!("supported range is 1..={MAX_GAUSS_POINTS}, got {npts}"),
        ));
    }
    let n = npts;
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    Ok(QuadratureRule { points, weights })
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integral blocks over one element. Indices follow local node order;
/// `b`, `c`, `ub`, `uc` are `[m][k]` with `m` the pressure node, `d` is
/// `[n][l]` with `n` the velocity node.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ElementMatrices {
    pub h: f64,
    /// `int phi_n phi_k`
    pub m: [[f64; 3]; 3],
    /// `int phi_n' phi_k'`
    pub a: [[f64; 3]; 3],
    /// `int U phi_n phi_k`
    pub mu: [[f64; 3]; 3],
    /// `int U' phi_n phi_k`
    pub mdu: [[f64; 3]; 3],
    /// `int psi_m phi_k`
    pub b: [[f64; 3]; 2],
    /// `int psi_m phi_k'`
    pub c: [[f64; 3]; 2],
    /// `int psi_m psi_l`
    pub mp: [[f64; 2]; 2],
    /// `int psi_m' psi_l'`
    pub ap: [[f64; 2]; 2],
    /// `int U' phi_n psi_l`
    pub d: [[f64; 2]; 3],
    /// `int U psi_m phi_k`
    pub ub: [[f64; 3]; 2],
    /// `int U psi_m phi_k'`
    pub uc: [[f64; 3]; 2],
}

pub fn element_integrals(
    element: (f64, f64),
    profile: &dyn FlowProfile,
    rule: &QuadratureRule,
) -> Result<ElementMatrices> {
    let (y0, y1) = element;
    let h = y1 - y0;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Mesh(format!("degenerate element [{y0}, {y1}]")));
    }
    let mut e = ElementMatrices { h, ..Default::default() };
    for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = quad_shape(xi);
        let psi = lin_shape(xi);
        let dphi = phi.dy(h);
        let dpsi = psi.dy(h);
        let (u, du) = profile.eval(y0 + h * xi);
        let wh = w * h;
        for n in 0..3 {
            for k in 0..3 {
                let pp = wh * phi.values[n] * phi.values[k];
                e.m[n][k] += pp;
                e.a[n][k] += wh * dphi[n] * dphi[k];
                e.mu[n][k] += u * pp;
                e.mdu[n][k] += du * pp;
            }
            for l in 0..2 {
                e.d[n][l] += wh * du * phi.values[n] * psi.values[l];
            }
        }
        for m in 0..2 {
            for k in 0..3 {
                let b = wh * psi.values[m] * phi.values[k];
                let c = wh * psi.values[m] * dphi[k];
                e.b[m][k] += b;
                e.c[m][k] += c;
                e.ub[m][k] += u * b;
                e.uc[m][k] += u * c;
            }
            for l in 0..2 {
                e.mp[m][l] += wh * psi.values[m] * psi.values[l];
                e.ap[m][l] += wh * dpsi[m] * dpsi[l];
            }
        }
    }
    Ok(e)
}
