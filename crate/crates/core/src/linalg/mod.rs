//! Dense complex linear algebra.
//!
//! Everything here works on [`CMatrix`], a column-major dense matrix of
//! `Complex64`. Sizes of interest are a few hundred to a few thousand rows,
//! so no blocking or BLAS is attempted.

mod cholesky;
mod hessenberg;
mod lu;
mod matrix;
mod qz;

pub use cholesky::{symmetric_solve, SymmetricFactor};
pub use hessenberg::{hessenberg_eig, HessenbergEig};
pub use lu::{lu_solve, LuFactor};
pub use matrix::CMatrix;
pub use qz::{generalized_qz, QzDecomposition};

use crate::C64;
use std::cmp::Ordering;

/// Eigenvalues with optional right eigenvectors and per-pair backward errors.
#[derive(Clone, Debug, Default)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// Unit 2-norm right eigenvectors, one per eigenvalue, when requested.
    pub vectors: Option<Vec<Vec<C64>>>,
    /// Upper bound on `||A x - lambda B x|| / ((||A|| + |lambda| ||B||) ||x||)`
    /// (Frobenius norms; `B = I` for standard problems).
    pub backward_errors: Vec<f64>,
    /// Number of infinite eigenvalues of a singular pencil.
    pub infinite: usize,
}

/// Stability ordering: descending imaginary part, ties by descending real part.
pub fn stability_order(a: &C64, b: &C64) -> Ordering {
    b.im.partial_cmp(&a.im)
        .unwrap_or(Ordering::Equal)
        .then(b.re.partial_cmp(&a.re).unwrap_or(Ordering::Equal))
}

/// Permutation that sorts `values` by [`stability_order`].
pub fn stability_permutation(values: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| stability_order(&values[i], &values[j]));
    idx
}

pub(crate) fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Euclidean norm.
pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn normalize(x: &mut [C64]) {
    let n = norm2(x);
    if n > 0.0 {
        x.iter_mut().for_each(|z| *z /= n);
    }
}

/// Complex plane rotation `[c s; -conj(s) c]` with `c` real, chosen so that
/// it maps `(f, g)` onto `(r, 0)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Rotation {
    pub c: f64,
    pub s: C64,
}

impl Rotation {
    pub fn zeroing(f: C64, g: C64) -> (Self, C64) {
        if g == C64::new(0.0, 0.0) {
            return (Self { c: 1.0, s: C64::new(0.0, 0.0) }, f);
        }
        if f == C64::new(0.0, 0.0) {
            let gn = g.norm();
            return (Self { c: 0.0, s: g.conj() / gn }, C64::new(gn, 0.0));
        }
        let fa = f.norm();
        let d = fa.hypot(g.norm());
        let phase = f / fa;
        (
            Self {
                c: fa / d,
                s: phase * g.conj() / d,
            },
            phase * d,
        )
    }

    /// `(x, y) <- (c x + s y, c y - conj(s) x)`
    #[inline]
    pub fn apply(&self, x: &mut C64, y: &mut C64) {
        let t = *x * self.c + self.s * *y;
        *y = *y * self.c - self.s.conj() * *x;
        *x = t;
    }
}
