//! Complex QZ for the generalized problem `A x = lambda B x`.

use super::hessenberg::apply_reflector;
use super::{abs1, norm2, normalize, stability_permutation, CMatrix, Rotation, Spectrum};
use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Generalized Schur form `Q^H A Z = S`, `Q^H B Z = P` with `S`, `P` upper
/// triangular. Only `Z` is kept.
#[derive(Clone, Debug)]
pub struct QzDecomposition {
    a: CMatrix,
    b: CMatrix,
    anorm: f64,
    bnorm: f64,
    s: CMatrix,
    p: CMatrix,
    z: Option<CMatrix>,
    alpha: Vec<C64>,
    beta: Vec<C64>,
    /// Positions of finite pairs, in stability order of `alpha / beta`.
    finite: Vec<usize>,
    eigenvalues: Vec<C64>,
}

impl QzDecomposition {
    pub fn new(a: &CMatrix, b: &CMatrix, want_vectors: bool) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || !b.is_square() || b.rows() != n || n == 0 {
            return Err(Error::Dimension(format!(
                "pencil of {}x{} and {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::param("pencil", "non-finite entries"));
        }
        let mut h = a.clone();
        let mut t = b.clone();
        let mut z = want_vectors.then(|| CMatrix::identity(n));
        triangularize_b(&mut h, &mut t);
        hessenberg_triangular(&mut h, &mut t, z.as_mut());
        let (alpha, beta) = qz_iterate(&mut h, &mut t, z.as_mut(), want_vectors)?;

        let anorm = a.norm_fro();
        let bnorm = b.norm_fro();
        let mut finite = Vec::new();
        for (i, (al, be)) in alpha.iter().zip(&beta).enumerate() {
            let tiny_a = al.norm() < 1e-14 * anorm.max(f64::MIN_POSITIVE);
            let tiny_b = be.norm() < 1e-14 * bnorm.max(f64::MIN_POSITIVE);
            if tiny_a && tiny_b {
                return Err(Error::IndeterminatePencil { index: i });
            }
            if be.norm() > 10.0 * n as f64 * f64::EPSILON * bnorm {
                finite.push(i);
            }
        }
        let values: Vec<C64> = finite.iter().map(|&i| alpha[i] / beta[i]).collect();
        let order = stability_permutation(&values);
        let finite: Vec<usize> = order.iter().map(|&k| finite[k]).collect();
        let eigenvalues = order.iter().map(|&k| values[k]).collect();
        Ok(Self {
            a: a.clone(),
            b: b.clone(),
            anorm,
            bnorm,
            s: h,
            p: t,
            z,
            alpha,
            beta,
            finite,
            eigenvalues,
        })
    }

    /// Finite eigenvalues in stability order.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Number of infinite eigenvalues.
    pub fn infinite(&self) -> usize {
        self.alpha.len() - self.finite.len()
    }

    /// Raw `(alpha, beta)` pairs in Schur order.
    pub fn pairs(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        self.alpha.iter().copied().zip(self.beta.iter().copied())
    }

    /// Unit right eigenvector for `eigenvalues()[index]`.
    pub fn eigenvector(&self, index: usize) -> Result<Vec<C64>> {
        let z = self
            .z
            .as_ref()
            .ok_or_else(|| Error::param("want_vectors", "decomposition computed without vectors"))?;
        let k = *self
            .finite
            .get(index)
            .ok_or_else(|| Error::param("index", format!("{index} out of range")))?;
        let y = triangular_vector(&self.s, &self.p, k, self.alpha[k], self.beta[k]);
        let mut x = z.mul_vec(&y);
        normalize(&mut x);
        Ok(x)
    }

    /// `||A x - lambda B x|| / ((||A||_F + |lambda| ||B||_F) ||x||)`.
    pub fn residual(&self, lambda: C64, x: &[C64]) -> f64 {
        let ax = self.a.mul_vec(x);
        let bx = self.b.mul_vec(x);
        let r: f64 = ax
            .iter()
            .zip(&bx)
            .map(|(p, q)| (p - lambda * q).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale = (self.anorm + lambda.norm() * self.bnorm) * norm2(x);
        r / scale.max(f64::MIN_POSITIVE)
    }

    pub fn into_spectrum(self) -> Result<Spectrum> {
        let n = self.alpha.len();
        let floor = 4.0 * n as f64 * f64::EPSILON;
        let infinite = self.infinite();
        let (vectors, backward_errors) = if self.z.is_some() {
            let mut vectors = Vec::with_capacity(self.eigenvalues.len());
            let mut errs = Vec::with_capacity(self.eigenvalues.len());
            for (i, &lambda) in self.eigenvalues.iter().enumerate() {
                let x = self.eigenvector(i)?;
                errs.push(self.residual(lambda, &x) * (1.0 + 1e-6) + floor);
                vectors.push(x);
            }
            (Some(vectors), errs)
        } else {
            (None, vec![floor; self.eigenvalues.len()])
        };
        Ok(Spectrum {
            eigenvalues: self.eigenvalues,
            vectors,
            backward_errors,
            infinite,
        })
    }
}

/// Finite eigenvalues and eigenvectors of the pencil `(A, B)`; infinite
/// eigenvalues are only counted.
pub fn generalized_qz(a: &CMatrix, b: &CMatrix) -> Result<Spectrum> {
    QzDecomposition::new(a, b, true)?.into_spectrum()
}

/// `B <- Q^H B` upper triangular, `A <- Q^H A`.
fn triangularize_b(a: &mut CMatrix, b: &mut CMatrix) {
    let n = b.rows();
    for k in 0..n.saturating_sub(1) {
        let tail = norm2(&b.col(k)[k + 1..]);
        if tail == 0.0 {
            continue;
        }
        let mut w = b.col(k)[k..].to_vec();
        let alpha = w[0];
        let xnorm = norm2(&w);
        let phase = if alpha == ZERO { ONE } else { alpha / alpha.norm() };
        w[0] += phase * xnorm;
        normalize(&mut w);
        for j in k + 1..n {
            apply_reflector(&w, &mut b.col_mut(j)[k..]);
        }
        for j in 0..n {
            apply_reflector(&w, &mut a.col_mut(j)[k..]);
        }
        b[(k, k)] = -phase * xnorm;
        for v in &mut b.col_mut(k)[k + 1..] {
            *v = ZERO;
        }
    }
}

fn rotate_rows(m: &mut CMatrix, rot: Rotation, i: usize, cols: std::ops::Range<usize>) {
    for j in cols {
        let mut x = m[(i, j)];
        let mut y = m[(i + 1, j)];
        rot.apply(&mut x, &mut y);
        m[(i, j)] = x;
        m[(i + 1, j)] = y;
    }
}

/// Column rotation with `x` = column `cx`, `y` = column `cy`.
fn rotate_cols(m: &mut CMatrix, rot: Rotation, cx: usize, cy: usize, rows: std::ops::Range<usize>) {
    let (x, y) = m.col_pair_mut(cx, cy);
    for r in rows {
        rot.apply(&mut x[r], &mut y[r]);
    }
}

/// Reduce `A` to upper Hessenberg form while keeping `B` triangular.
fn hessenberg_triangular(a: &mut CMatrix, b: &mut CMatrix, mut z: Option<&mut CMatrix>) {
    let n = a.rows();
    for j in 0..n.saturating_sub(2) {
        for i in (j + 2..n).rev() {
            let (rot, r) = Rotation::zeroing(a[(i - 1, j)], a[(i, j)]);
            a[(i - 1, j)] = r;
            a[(i, j)] = ZERO;
            rotate_rows(a, rot, i - 1, j + 1..n);
            rotate_rows(b, rot, i - 1, i - 1..n);
            let (rot, r) = Rotation::zeroing(b[(i, i)], b[(i, i - 1)]);
            b[(i, i)] = r;
            b[(i, i - 1)] = ZERO;
            rotate_cols(b, rot, i, i - 1, 0..i);
            rotate_cols(a, rot, i, i - 1, 0..n);
            if let Some(z) = z.as_deref_mut() {
                rotate_cols(z, rot, i, i - 1, 0..n);
            }
        }
    }
}

/// QZ iteration on a Hessenberg-triangular pair. With `schur` the full
/// matrices are updated so that `S`, `P` end up triangular.
fn qz_iterate(
    h: &mut CMatrix,
    t: &mut CMatrix,
    mut z: Option<&mut CMatrix>,
    schur: bool,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = h.rows();
    let mut alpha = vec![ZERO; n];
    let mut beta = vec![ZERO; n];
    let safmin = f64::MIN_POSITIVE;
    let ulp = f64::EPSILON;
    let anorm = h.norm_fro();
    let bnorm = t.norm_fro();
    let atol = safmin.max(ulp * anorm);
    let btol = safmin.max(ulp * bnorm);
    let ascale = 1.0 / safmin.max(anorm);
    let bscale = 1.0 / safmin.max(bnorm);

    let small_sub = |h: &CMatrix, j: usize| {
        abs1(h[(j, j - 1)]) <= safmin.max(ulp * (abs1(h[(j, j)]) + abs1(h[(j - 1, j - 1)])))
    };

    let mut ilast = n - 1;
    let mut ifrstm = 0;
    let mut ilastm = n - 1;
    let mut iiter = 0usize;
    let mut eshift = ZERO;
    let maxit = 30 * n;

    enum Next {
        Deflate,
        ClearSub,
        Sweep(usize),
    }

    for _ in 0..maxit {
        let next = 'split: {
            if ilast == 0 {
                break 'split Next::Deflate;
            }
            if small_sub(h, ilast) {
                h[(ilast, ilast - 1)] = ZERO;
                break 'split Next::Deflate;
            }
            if t[(ilast, ilast)].norm() <= btol {
                t[(ilast, ilast)] = ZERO;
                break 'split Next::ClearSub;
            }
            for j in (0..ilast).rev() {
                let ilazro = if j == 0 {
                    true
                } else if small_sub(h, j) {
                    h[(j, j - 1)] = ZERO;
                    true
                } else {
                    false
                };
                if t[(j, j)].norm() < btol {
                    t[(j, j)] = ZERO;
                    let mut ilazr2 = !ilazro
                        && abs1(h[(j, j - 1)]) * (ascale * abs1(h[(j + 1, j)]))
                            <= abs1(h[(j, j)]) * (ascale * atol);
                    if ilazro || ilazr2 {
                        // Chase the zero on T's diagonal down to the bottom.
                        for jch in j..ilast {
                            let (rot, r) = Rotation::zeroing(h[(jch, jch)], h[(jch + 1, jch)]);
                            h[(jch, jch)] = r;
                            h[(jch + 1, jch)] = ZERO;
                            rotate_rows(h, rot, jch, jch + 1..ilastm + 1);
                            rotate_rows(t, rot, jch, jch + 1..ilastm + 1);
                            if ilazr2 {
                                h[(jch, jch - 1)] *= rot.c;
                            }
                            ilazr2 = false;
                            if abs1(t[(jch + 1, jch + 1)]) >= btol {
                                if jch + 1 >= ilast {
                                    break 'split Next::Deflate;
                                }
                                break 'split Next::Sweep(jch + 1);
                            }
                            t[(jch + 1, jch + 1)] = ZERO;
                        }
                    } else {
                        for jch in j..ilast {
                            let (rot, r) = Rotation::zeroing(t[(jch, jch + 1)], t[(jch + 1, jch + 1)]);
                            t[(jch, jch + 1)] = r;
                            t[(jch + 1, jch + 1)] = ZERO;
                            if jch + 1 < ilastm {
                                rotate_rows(t, rot, jch, jch + 2..ilastm + 1);
                            }
                            rotate_rows(h, rot, jch, jch - 1..ilastm + 1);
                            let (rot, r) = Rotation::zeroing(h[(jch + 1, jch)], h[(jch + 1, jch - 1)]);
                            h[(jch + 1, jch)] = r;
                            h[(jch + 1, jch - 1)] = ZERO;
                            rotate_cols(h, rot, jch, jch - 1, ifrstm..jch + 1);
                            rotate_cols(t, rot, jch, jch - 1, ifrstm..jch);
                            if let Some(z) = z.as_deref_mut() {
                                rotate_cols(z, rot, jch, jch - 1, 0..n);
                            }
                        }
                    }
                    break 'split Next::ClearSub;
                } else if ilazro {
                    break 'split Next::Sweep(j);
                }
            }
            unreachable!("split search always terminates at the first row")
        };

        let next = match next {
            Next::ClearSub => {
                let (rot, r) = Rotation::zeroing(h[(ilast, ilast)], h[(ilast, ilast - 1)]);
                h[(ilast, ilast)] = r;
                h[(ilast, ilast - 1)] = ZERO;
                rotate_cols(h, rot, ilast, ilast - 1, ifrstm..ilast);
                rotate_cols(t, rot, ilast, ilast - 1, ifrstm..ilast);
                if let Some(z) = z.as_deref_mut() {
                    rotate_cols(z, rot, ilast, ilast - 1, 0..n);
                }
                Next::Deflate
            }
            other => other,
        };

        match next {
            Next::Deflate => {
                alpha[ilast] = h[(ilast, ilast)];
                beta[ilast] = t[(ilast, ilast)];
                if ilast == 0 {
                    return Ok((alpha, beta));
                }
                ilast -= 1;
                iiter = 0;
                eshift = ZERO;
                if !schur {
                    ilastm = ilast;
                    if ifrstm > ilast {
                        ifrstm = 0;
                    }
                }
            }
            Next::Sweep(ifirst) => {
                iiter += 1;
                if !schur {
                    ifrstm = ifirst;
                }
                let shift = if !iiter.is_multiple_of(10) {
                    let l = ilast;
                    let u12 = (bscale * t[(l - 1, l)]) / (bscale * t[(l, l)]);
                    let ad11 = (ascale * h[(l - 1, l - 1)]) / (bscale * t[(l - 1, l - 1)]);
                    let ad21 = (ascale * h[(l, l - 1)]) / (bscale * t[(l - 1, l - 1)]);
                    let ad12 = (ascale * h[(l - 1, l)]) / (bscale * t[(l, l)]);
                    let ad22 = (ascale * h[(l, l)]) / (bscale * t[(l, l)]);
                    let abi22 = ad22 - u12 * ad21;
                    let abi12 = ad12 - u12 * ad11;
                    let mut shift = abi22;
                    let ctemp = abi12.sqrt() * ad21.sqrt();
                    let mut temp = abs1(ctemp);
                    if ctemp != ZERO {
                        let x = (ad11 - shift) * 0.5;
                        let temp2 = abs1(x);
                        temp = temp.max(temp2);
                        let mut y = ((x / temp) * (x / temp) + (ctemp / temp) * (ctemp / temp)).sqrt() * temp;
                        if temp2 > 0.0 {
                            let xs = x / temp2;
                            if xs.re * y.re + xs.im * y.im < 0.0 {
                                y = -y;
                            }
                        }
                        shift -= ctemp * (ctemp / (x + y));
                    }
                    shift
                } else {
                    let l = ilast;
                    if iiter.is_multiple_of(20) && bscale * abs1(t[(l, l)]) > safmin {
                        eshift += (ascale * h[(l, l)]) / (bscale * t[(l, l)]);
                    } else {
                        eshift += (ascale * h[(l, l - 1)]) / (bscale * t[(l - 1, l - 1)]);
                    }
                    eshift
                };

                let mut istart = ifirst;
                let mut ctemp = ascale * h[(ifirst, ifirst)] - shift * (bscale * t[(ifirst, ifirst)]);
                for j in (ifirst + 1..ilast).rev() {
                    let c = ascale * h[(j, j)] - shift * (bscale * t[(j, j)]);
                    let mut temp = abs1(c);
                    let mut temp2 = ascale * abs1(h[(j + 1, j)]);
                    let tempr = temp.max(temp2);
                    if tempr < 1.0 && tempr != 0.0 {
                        temp /= tempr;
                        temp2 /= tempr;
                    }
                    if abs1(h[(j, j - 1)]) * temp2 <= temp * atol {
                        istart = j;
                        ctemp = c;
                        break;
                    }
                }

                let ctemp2 = ascale * h[(istart + 1, istart)];
                let (mut rot, _) = Rotation::zeroing(ctemp, ctemp2);
                for j in istart..ilast {
                    if j > istart {
                        let (r2, r) = Rotation::zeroing(h[(j, j - 1)], h[(j + 1, j - 1)]);
                        rot = r2;
                        h[(j, j - 1)] = r;
                        h[(j + 1, j - 1)] = ZERO;
                    }
                    rotate_rows(h, rot, j, j..ilastm + 1);
                    rotate_rows(t, rot, j, j..ilastm + 1);
                    let (r2, r) = Rotation::zeroing(t[(j + 1, j + 1)], t[(j + 1, j)]);
                    t[(j + 1, j + 1)] = r;
                    t[(j + 1, j)] = ZERO;
                    rotate_cols(h, r2, j + 1, j, ifrstm..(j + 2).min(ilast) + 1);
                    rotate_cols(t, r2, j + 1, j, ifrstm..j + 1);
                    if let Some(z) = z.as_deref_mut() {
                        rotate_cols(z, r2, j + 1, j, 0..n);
                    }
                }
            }
            Next::ClearSub => unreachable!(),
        }
    }
    Err(Error::NoConvergence { index: ilast })
}

/// Right eigenvector `y` of the triangular pair for the pair at `k`,
/// solving `(beta S - alpha P) y = 0` with `y_k = 1`.
fn triangular_vector(s: &CMatrix, p: &CMatrix, k: usize, alpha: C64, beta: C64) -> Vec<C64> {
    let n = s.rows();
    let small = f64::EPSILON * (abs1(beta) * s.norm_fro() + abs1(alpha) * p.norm_fro()).max(f64::MIN_POSITIVE);
    let mut y = vec![ZERO; n];
    y[k] = ONE;
    for j in (0..k).rev() {
        let mut acc = ZERO;
        for m in j + 1..=k {
            acc += (beta * s[(j, m)] - alpha * p[(j, m)]) * y[m];
        }
        let mut d = beta * s[(j, j)] - alpha * p[(j, j)];
        if abs1(d) < small {
            d = C64::new(small, 0.0);
        }
        y[j] = -acc / d;
        let big = y[j].norm();
        if big > 1e100 {
            y[j..=k].iter_mut().for_each(|v| *v /= big);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hessenberg_eig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn diagonal_pencil() {
        let a = CMatrix::from_diagonal(&[c(2.0), c(3.0)]);
        let b = CMatrix::from_diagonal(&[c(1.0), c(3.0)]);
        let s = generalized_qz(&a, &b).unwrap();
        assert_eq!(s.infinite, 0);
        assert!((s.eigenvalues[0] - c(2.0)).norm() < 1e-14);
        assert!((s.eigenvalues[1] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_b_gives_infinite_eigenvalue() {
        let a = CMatrix::identity(2);
        let b = CMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let s = generalized_qz(&a, &b).unwrap();
        assert_eq!(s.infinite, 1);
        assert_eq!(s.eigenvalues.len(), 1);
        assert!((s.eigenvalues[0] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn identity_b_matches_qr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 3, 12, 30] {
            let a = random_matrix(&mut rng, n);
            let qz = generalized_qz(&a, &CMatrix::identity(n)).unwrap();
            let qr = hessenberg_eig(&a, false).unwrap();
            for (x, y) in qz.eigenvalues.iter().zip(&qr.eigenvalues) {
                assert!((x - y).norm() < 1e-9, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn residual_contract_random_pencils() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2, 6, 20] {
            let a = random_matrix(&mut rng, n);
            let b = random_matrix(&mut rng, n);
            let s = generalized_qz(&a, &b).unwrap();
            let vecs = s.vectors.as_ref().unwrap();
            for ((lambda, x), est) in s.eigenvalues.iter().zip(vecs).zip(&s.backward_errors) {
                let ax = a.mul_vec(x);
                let bx = b.mul_vec(x);
                let r = norm2(&ax.iter().zip(&bx).map(|(p, q)| p - lambda * q).collect::<Vec<_>>());
                let scale = a.norm_fro() + lambda.norm() * b.norm_fro();
                assert!(r <= 1e-8 * scale, "n={n} residual {r}");
                assert!(*est * scale >= r);
            }
        }
    }

    #[test]
    fn block_pencil_with_zero_block() {
        // [[K, L], [H, -G]] against [[S, 0], [0, 0]]: the finite part is the
        // Schur complement problem.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let nv = 6;
        let np = 3;
        let k = random_matrix(&mut rng, nv);
        let l = CMatrix::from_fn(nv, np, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0));
        let hm = CMatrix::from_fn(np, nv, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0));
        let g = CMatrix::from_fn(np, np, |i, j| c(if i == j { -3.0 } else { 0.5 }));
        let s = CMatrix::from_fn(nv, nv, |i, j| c(if i == j { 2.0 } else { 0.1 }));
        let mut a = CMatrix::zeros(nv + np, nv + np);
        a.set_block(0, 0, &k);
        a.set_block(0, nv, &l);
        a.set_block(nv, 0, &hm);
        a.set_block(nv, nv, &g.scaled(c(-1.0)));
        let mut b = CMatrix::zeros(nv + np, nv + np);
        b.set_block(0, 0, &s);
        let qz = generalized_qz(&a, &b).unwrap();
        assert_eq!(qz.infinite, np);
        let e = k.add(&l.matmul(&crate::linalg::lu_solve(&g, &hm).unwrap()).unwrap()).unwrap();
        let reduced = crate::linalg::lu_solve(&s, &e).unwrap();
        let qr = hessenberg_eig(&reduced, false).unwrap();
        for (x, y) in qz.eigenvalues.iter().zip(&qr.eigenvalues) {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn zero_pencil_is_indeterminate() {
        let z = CMatrix::zeros(2, 2);
        assert!(matches!(generalized_qz(&z, &z), Err(Error::IndeterminatePencil { .. })));
    }
}
