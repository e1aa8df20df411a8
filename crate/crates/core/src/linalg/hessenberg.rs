//! Standard eigenproblem: balancing, Householder reduction to Hessenberg
//! form and complex single-shift QR with Wilkinson shifts. Eigenvectors come
//! from inverse iteration on the Hessenberg matrix, mapped back and checked
//! against the original matrix.

use super::{abs1, norm2, normalize, stability_permutation, CMatrix, LuFactor, Rotation, Spectrum};
use crate::{Error, Result, C64};

/// QR sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS: usize = 30;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Eigenvalues of a dense complex matrix with on-demand eigenvectors.
#[derive(Clone, Debug)]
pub struct HessenbergEig {
    original: CMatrix,
    norm: f64,
    /// Balanced Hessenberg form, untouched by the QR sweeps.
    hess: CMatrix,
    /// Householder vectors `(k, w)`; `P_k = I - 2 w w^H` acts on rows `k+1..`.
    reflectors: Vec<(usize, Vec<C64>)>,
    /// Diagonal balancing similarity, `A_bal = D^-1 A D`.
    scale: Vec<f64>,
    eigenvalues: Vec<C64>,
}

impl HessenbergEig {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if !a.is_square() || a.rows() == 0 {
            return Err(Error::Dimension(format!(
                "eigenvalues of {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_finite() {
            return Err(Error::param("matrix", "non-finite entries"));
        }
        let mut work = a.clone();
        let scale = balance(&mut work);
        let reflectors = reduce_to_hessenberg(&mut work);
        let hess = work.clone();
        let values = hqr_eigenvalues(&mut work)?;
        let order = stability_permutation(&values);
        let eigenvalues = order.iter().map(|&i| values[i]).collect();
        Ok(Self {
            norm: a.norm_fro(),
            original: a.clone(),
            hess,
            reflectors,
            scale,
            eigenvalues,
        })
    }

    /// Eigenvalues in stability order (descending imaginary part).
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.original
    }

    /// Unit right eigenvector for `eigenvalues()[index]`.
    pub fn eigenvector(&self, index: usize) -> Result<Vec<C64>> {
        let lambda = *self
            .eigenvalues
            .get(index)
            .ok_or_else(|| Error::param("index", format!("{index} out of range")))?;
        self.eigenvector_for(lambda)
    }

    /// Unit right eigenvector for an (approximate) eigenvalue `lambda`.
    pub fn eigenvector_for(&self, lambda: C64) -> Result<Vec<C64>> {
        let n = self.hess.rows();
        if n == 1 {
            return Ok(vec![ONE]);
        }
        let mut y = hessenberg_inverse_iteration(&self.hess, lambda);
        for (k, w) in self.reflectors.iter().rev() {
            apply_reflector(w, &mut y[k + 1..]);
        }
        for (yi, d) in y.iter_mut().zip(&self.scale) {
            *yi *= d;
        }
        normalize(&mut y);
        if self.residual(lambda, &y) > 1e-10 {
            y = dense_inverse_iteration(&self.original, lambda, self.norm, y)?;
        }
        Ok(y)
    }

    /// `||A x - lambda x|| / (||A||_F ||x||)`.
    pub fn residual(&self, lambda: C64, x: &[C64]) -> f64 {
        let ax = self.original.mul_vec(x);
        let r: f64 = ax
            .iter()
            .zip(x)
            .map(|(a, xi)| (a - lambda * xi).norm_sqr())
            .sum::<f64>()
            .sqrt();
        r / (self.norm.max(f64::MIN_POSITIVE) * norm2(x))
    }

    pub fn into_spectrum(self, want_vectors: bool) -> Result<Spectrum> {
        let n = self.eigenvalues.len();
        let floor = 4.0 * n as f64 * f64::EPSILON;
        if !want_vectors {
            return Ok(Spectrum {
                backward_errors: vec![floor; n],
                eigenvalues: self.eigenvalues,
                vectors: None,
                infinite: 0,
            });
        }
        let mut vectors = Vec::with_capacity(n);
        let mut backward_errors = Vec::with_capacity(n);
        for (i, &lambda) in self.eigenvalues.iter().enumerate() {
            let x = self.eigenvector(i)?;
            backward_errors.push(self.residual(lambda, &x) * (1.0 + 1e-6) + floor);
            vectors.push(x);
        }
        Ok(Spectrum {
            eigenvalues: self.eigenvalues,
            vectors: Some(vectors),
            backward_errors,
            infinite: 0,
        })
    }
}

/// Eigenvalues (and optionally eigenvectors) of a square complex matrix,
/// sorted by descending imaginary part.
pub fn hessenberg_eig(a: &CMatrix, want_vectors: bool) -> Result<Spectrum> {
    HessenbergEig::new(a)?.into_spectrum(want_vectors)
}

/// Diagonal scaling by powers of two that equalizes row and column norms.
/// Returns the scale factors `d` with `A <- D^-1 A D`.
fn balance(a: &mut CMatrix) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let mut scale = vec![1.0; n];
    let mut noconv = true;
    while noconv {
        noconv = false;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[(j, i)]);
                    r += abs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
                g /= RADIX;
            }
            g = r * RADIX;
            while c >= g {
                f /= RADIX;
                c /= RADIX * RADIX;
                g *= RADIX;
            }
            if (c + r) / f < 0.95 * s {
                scale[i] *= f;
                noconv = true;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for z in a.col_mut(i) {
                    *z *= f;
                }
            }
        }
    }
    scale
}

pub(super) fn apply_reflector(w: &[C64], x: &mut [C64]) {
    let dot: C64 = w.iter().zip(x.iter()).map(|(wi, xi)| wi.conj() * xi).sum();
    let t = dot * 2.0;
    for (xi, wi) in x.iter_mut().zip(w) {
        *xi -= wi * t;
    }
}

fn reduce_to_hessenberg(a: &mut CMatrix) -> Vec<(usize, Vec<C64>)> {
    let n = a.rows();
    let mut reflectors = Vec::new();
    for k in 0..n.saturating_sub(2) {
        let tail = norm2(&a.col(k)[k + 2..]);
        if tail == 0.0 {
            continue;
        }
        let mut w = a.col(k)[k + 1..].to_vec();
        let alpha = w[0];
        let xnorm = norm2(&w);
        let phase = if alpha == ZERO { ONE } else { alpha / alpha.norm() };
        w[0] += phase * xnorm;
        normalize(&mut w);

        for j in k..n {
            apply_reflector(&w, &mut a.col_mut(j)[k + 1..]);
        }
        let mut y = vec![ZERO; n];
        for (c, wc) in w.iter().enumerate() {
            for (yi, ai) in y.iter_mut().zip(a.col(k + 1 + c)) {
                *yi += ai * wc;
            }
        }
        for (c, wc) in w.iter().enumerate() {
            let f = wc.conj() * 2.0;
            for (ai, yi) in a.col_mut(k + 1 + c).iter_mut().zip(&y) {
                *ai -= yi * f;
            }
        }
        a[(k + 1, k)] = -phase * xnorm;
        for z in &mut a.col_mut(k)[k + 2..] {
            *z = ZERO;
        }
        reflectors.push((k, w));
    }
    reflectors
}

/// Shifted QR on an upper Hessenberg matrix; only the active window is
/// updated, so `h` holds garbage afterwards.
fn hqr_eigenvalues(h: &mut CMatrix) -> Result<Vec<C64>> {
    let n = h.rows();
    let mut eig = vec![ZERO; n];
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    let mut i = n - 1;
    loop {
        let mut sweeps = 0;
        loop {
            let lo = find_split(h, i, ulp, smlnum);
            if lo > 0 {
                h[(lo, lo - 1)] = ZERO;
            }
            if lo == i {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::NoConvergence { index: i });
            }
            let shift = if sweeps % 10 == 0 {
                h[(i, i)] + 0.75 * h[(i, i - 1)].norm()
            } else {
                wilkinson_shift(h[(i - 1, i - 1)], h[(i - 1, i)], h[(i, i - 1)], h[(i, i)])
            };
            qr_sweep(h, lo, i, shift, ulp);
        }
        eig[i] = h[(i, i)];
        if i == 0 {
            break;
        }
        i -= 1;
    }
    Ok(eig)
}

/// Start of the unreduced block that ends at row `i`.
fn find_split(h: &CMatrix, i: usize, ulp: f64, smlnum: f64) -> usize {
    let n = h.rows();
    let mut k = i;
    while k > 0 {
        let sub = abs1(h[(k, k - 1)]);
        if sub <= smlnum {
            break;
        }
        let mut tst = abs1(h[(k - 1, k - 1)]) + abs1(h[(k, k)]);
        if tst == 0.0 {
            if k >= 2 {
                tst += abs1(h[(k - 1, k - 2)]);
            }
            if k + 1 < n {
                tst += abs1(h[(k + 1, k)]);
            }
        }
        if sub <= ulp * tst {
            let sup = abs1(h[(k - 1, k)]);
            let (ab, ba) = (sub.max(sup), sub.min(sup));
            let d1 = abs1(h[(k, k)]);
            let d2 = abs1(h[(k - 1, k - 1)] - h[(k, k)]);
            let (aa, bb) = (d1.max(d2), d1.min(d2));
            let s = aa + ab;
            if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                break;
            }
        }
        k -= 1;
    }
    k
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
pub(crate) fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let u = b.sqrt() * c.sqrt();
    let s = abs1(u);
    if s == 0.0 {
        return d;
    }
    let x = (a - d) * 0.5;
    let sx = abs1(x);
    let s = s.max(sx);
    let mut y = ((x / s) * (x / s) + (u / s) * (u / s)).sqrt() * s;
    if sx > 0.0 {
        let xs = x / sx;
        if xs.re * y.re + xs.im * y.im < 0.0 {
            y = -y;
        }
    }
    d - u * (u / (x + y))
}

fn qr_sweep(h: &mut CMatrix, lo: usize, i: usize, shift: C64, ulp: f64) {
    // Look for two consecutive small subdiagonals to start the bulge lower.
    let mut m = i - 1;
    let (v0, v1) = loop {
        let h11 = h[(m, m)];
        let h22 = h[(m + 1, m + 1)];
        let h11s = h11 - shift;
        let h21 = h[(m + 1, m)];
        let s = abs1(h11s) + abs1(h21);
        let (v0, v1) = if s == 0.0 { (ONE, ZERO) } else { (h11s / s, h21 / s) };
        if m == lo {
            break (v0, v1);
        }
        let h10 = h[(m, m - 1)];
        if abs1(h10) * abs1(v1) <= ulp * (abs1(v0) * (abs1(h11) + abs1(h22))) {
            break (v0, v1);
        }
        m -= 1;
    };

    for k in m..i {
        let rot = if k == m {
            let (rot, _) = Rotation::zeroing(v0, v1);
            if m > lo {
                h[(m, m - 1)] *= rot.c;
            }
            rot
        } else {
            let (rot, r) = Rotation::zeroing(h[(k, k - 1)], h[(k + 1, k - 1)]);
            h[(k, k - 1)] = r;
            h[(k + 1, k - 1)] = ZERO;
            rot
        };
        for j in k..=i {
            let mut x = h[(k, j)];
            let mut y = h[(k + 1, j)];
            rot.apply(&mut x, &mut y);
            h[(k, j)] = x;
            h[(k + 1, j)] = y;
        }
        let last = (k + 2).min(i);
        let sc = rot.s.conj();
        let (ck, ck1) = h.col_pair_mut(k, k + 1);
        for r in lo..=last {
            let x = ck[r];
            let y = ck1[r];
            ck[r] = x * rot.c + sc * y;
            ck1[r] = y * rot.c - rot.s * x;
        }
    }
}

/// Inverse iteration with `H - lambda I` for upper Hessenberg `H`,
/// O(n^2) per call.
fn hessenberg_inverse_iteration(h: &CMatrix, lambda: C64) -> Vec<C64> {
    let n = h.rows();
    let eps3 = f64::EPSILON * h.norm_fro().max(f64::MIN_POSITIVE);
    // Row-major working copy of H - lambda I.
    let mut u = vec![ZERO; n * n];
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            u[i * n + j] = h[(i, j)];
        }
        u[i * n + i] -= lambda;
    }
    let mut mult = vec![ZERO; n.saturating_sub(1)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    for k in 0..n - 1 {
        if u[(k + 1) * n + k].norm() > u[k * n + k].norm() {
            for j in k..n {
                u.swap(k * n + j, (k + 1) * n + j);
            }
            swapped[k] = true;
        }
        if u[k * n + k].norm() < eps3 {
            u[k * n + k] = C64::new(eps3, 0.0);
        }
        let l = u[(k + 1) * n + k] / u[k * n + k];
        mult[k] = l;
        u[(k + 1) * n + k] = ZERO;
        if l != ZERO {
            let (upper, lower) = u.split_at_mut((k + 1) * n);
            let row_k = &upper[k * n..];
            for j in k + 1..n {
                lower[j] -= l * row_k[j];
            }
        }
    }
    if u[(n - 1) * n + n - 1].norm() < eps3 {
        u[(n - 1) * n + n - 1] = C64::new(eps3, 0.0);
    }
    let back = |x: &mut [C64]| {
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= u[i * n + j] * x[j];
            }
            x[i] = s / u[i * n + i];
        }
    };
    let mut x = vec![ONE; n];
    back(&mut x);
    normalize(&mut x);
    for _ in 0..2 {
        for k in 0..n - 1 {
            if swapped[k] {
                x.swap(k, k + 1);
            }
            let xk = x[k];
            x[k + 1] -= mult[k] * xk;
        }
        back(&mut x);
        normalize(&mut x);
    }
    x
}

/// Fallback inverse iteration on the original matrix (O(n^3)).
fn dense_inverse_iteration(a: &CMatrix, lambda: C64, norm: f64, start: Vec<C64>) -> Result<Vec<C64>> {
    let n = a.rows();
    let mut delta = f64::EPSILON * norm.max(f64::MIN_POSITIVE) * 10.0;
    let lu = loop {
        let shifted = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                a[(i, j)] - lambda - delta
            } else {
                a[(i, j)]
            }
        });
        match LuFactor::new(&shifted) {
            Ok(lu) => break lu,
            Err(Error::Singular { .. }) if delta < 1e-6 * norm => delta *= 100.0,
            Err(e) => return Err(e),
        }
    };
    let mut x = start;
    for _ in 0..3 {
        lu.solve_in_place(&mut x);
        normalize(&mut x);
    }
    Ok(x)
}
