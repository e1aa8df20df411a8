use super::CMatrix;
use crate::{Error, Result, C64};

const SYMMETRY_TOL: f64 = 1e-12;

/// Cholesky factor of a real symmetric definite matrix of either sign:
/// `G = sign * L L^T`.
#[derive(Clone, Debug)]
pub struct SymmetricFactor {
    n: usize,
    /// Lower triangle, column-major.
    l: Vec<f64>,
    sign: f64,
}

impl SymmetricFactor {
    pub fn new(g: &CMatrix) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::Dimension(format!(
                "symmetric factor of {}x{} matrix",
                g.rows(),
                g.cols()
            )));
        }
        let n = g.rows();
        let scale = g.max_abs().max(f64::MIN_POSITIVE);
        let mut real = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let z = g[(i, j)];
                if z.im.abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Indefinite(format!("entry ({i}, {j}) is not real")));
                }
                if (z - g[(j, i)]).norm() > SYMMETRY_TOL * scale {
                    return Err(Error::Indefinite(format!("asymmetric at ({i}, {j})")));
                }
                real[i + j * n] = z.re;
            }
        }
        if let Some(l) = cholesky(&real, n, 1.0) {
            return Ok(Self { n, l, sign: 1.0 });
        }
        if let Some(l) = cholesky(&real, n, -1.0) {
            return Ok(Self { n, l, sign: -1.0 });
        }
        Err(Error::Indefinite("neither G nor -G admits a Cholesky factor".into()))
    }

    /// `+1` for positive definite, `-1` for negative definite input.
    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn solve_in_place(&self, x: &mut [C64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        let l = &self.l;
        for j in 0..n {
            x[j] /= l[j + j * n];
            let xj = x[j];
            for i in j + 1..n {
                x[i] -= xj * l[i + j * n];
            }
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for i in j + 1..n {
                s -= x[i] * l[i + j * n];
            }
            x[j] = s / l[j + j * n];
        }
        if self.sign < 0.0 {
            x.iter_mut().for_each(|z| *z = -*z);
        }
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        if b.rows() != self.n {
            return Err(Error::Dimension(format!(
                "symmetric solve: {} rows for order {}",
                b.rows(),
                self.n
            )));
        }
        let mut x = b.clone();
        for j in 0..x.cols() {
            self.solve_in_place(x.col_mut(j));
        }
        Ok(x)
    }
}

fn cholesky(a: &[f64], n: usize, sign: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = sign * a[j + j * n];
        for k in 0..j {
            d -= l[j + k * n] * l[j + k * n];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j + j * n] = d;
        for i in j + 1..n {
            let mut s = sign * a[i + j * n];
            for k in 0..j {
                s -= l[i + k * n] * l[j + k * n];
            }
            l[i + j * n] = s / d;
        }
    }
    Some(l)
}

/// Solves `G X = B` for real symmetric definite `G` (either sign).
pub fn symmetric_solve(g: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    SymmetricFactor::new(g)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn negative_identity() {
        let g = CMatrix::identity(3).scaled(c(-1.0));
        let b = CMatrix::column_vector(&[c(1.0), C64::new(0.0, 2.0), c(-3.0)]);
        let x = symmetric_solve(&g, &b).unwrap();
        assert_eq!(x, b.scaled(c(-1.0)));
    }

    #[test]
    fn single_element_pressure_matrix() {
        let g = CMatrix::from_real_rows(&[vec![-4.0 / 3.0, 5.0 / 6.0], vec![5.0 / 6.0, -4.0 / 3.0]]);
        let f = SymmetricFactor::new(&g).unwrap();
        assert_eq!(f.sign(), -1.0);
        let x = f.solve(&CMatrix::identity(2)).unwrap();
        let r = g.matmul(&x).unwrap().sub(&CMatrix::identity(2)).unwrap();
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn one_by_one() {
        let x = symmetric_solve(
            &CMatrix::from_real_rows(&[vec![-2.0]]),
            &CMatrix::from_real_rows(&[vec![4.0]]),
        )
        .unwrap();
        assert!((x[(0, 0)] - c(-2.0)).norm() < 1e-15);
    }

    #[test]
    fn indefinite_is_rejected() {
        let g = CMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert!(matches!(SymmetricFactor::new(&g), Err(Error::Indefinite(_))));
        let asym = CMatrix::from_real_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]);
        assert!(matches!(SymmetricFactor::new(&asym), Err(Error::Indefinite(_))));
    }
}
