use super::CMatrix;
use crate::{Error, Result, C64};

/// Relative pivot floor: a pivot below `PIVOT_TOL * ||A||_inf` is singular.
const PIVOT_TOL: f64 = 1e-14;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct LuFactor {
    lu: CMatrix,
    /// `perm[k]` is the row swapped with row `k` at step `k`.
    perm: Vec<usize>,
    /// Column `k` of `L` is zero from row `lower_end[k]` on.
    lower_end: Vec<usize>,
    /// Column `k` of `U` is zero above row `upper_start[k]`.
    upper_start: Vec<usize>,
}

/// One past the last nonzero of `col[from..]`, at least `from`.
fn last_nonzero(col: &[C64], from: usize) -> usize {
    col[from.min(col.len())..]
        .iter()
        .rposition(|z| *z != C64::new(0.0, 0.0))
        .map_or(from, |i| from + i + 1)
}

impl LuFactor {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "LU of non-square {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let tol = PIVOT_TOL * a.norm_inf();
        let mut lu = a.clone();
        let mut perm = Vec::with_capacity(n);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tol || !pmax.is_finite() {
                return Err(Error::Singular { pivot: k });
            }
            perm.push(p);
            if p != k {
                for j in 0..n {
                    let col = lu.col_mut(j);
                    col.swap(k, p);
                }
            }
            let pivot = lu[(k, k)];
            let end = {
                let col = lu.col_mut(k);
                for z in &mut col[k + 1..] {
                    *z /= pivot;
                }
                last_nonzero(col, k + 1)
            };
            for j in k + 1..n {
                let akj = lu[(k, j)];
                if akj == C64::new(0.0, 0.0) {
                    continue;
                }
                let (lcol, jcol) = lu.col_pair_mut(k, j);
                for (x, l) in jcol[k + 1..end].iter_mut().zip(&lcol[k + 1..end]) {
                    *x -= l * akj;
                }
            }
        }
        let lower_end = (0..n).map(|k| last_nonzero(lu.col(k), k + 1)).collect();
        let upper_start = (0..n)
            .map(|k| lu.col(k)[..k].iter().position(|z| *z != C64::new(0.0, 0.0)).unwrap_or(k))
            .collect();
        Ok(Self {
            lu,
            perm,
            lower_end,
            upper_start,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [C64]) {
        let n = self.dim();
        assert_eq!(x.len(), n, "LU solve dimension");
        for (k, &p) in self.perm.iter().enumerate() {
            x.swap(k, p);
        }
        for k in 0..n {
            let xk = x[k];
            if xk == C64::new(0.0, 0.0) {
                continue;
            }
            let col = self.lu.col(k);
            for i in k + 1..self.lower_end[k] {
                x[i] -= col[i] * xk;
            }
        }
        for k in (0..n).rev() {
            let col = self.lu.col(k);
            x[k] /= col[k];
            let xk = x[k];
            for i in self.upper_start[k]..k {
                x[i] -= col[i] * xk;
            }
        }
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        if b.rows() != self.dim() {
            return Err(Error::Dimension(format!(
                "LU solve: {} rows for order {}",
                b.rows(),
                self.dim()
            )));
        }
        let mut x = b.clone();
        for j in 0..x.cols() {
            self.solve_in_place(x.col_mut(j));
        }
        Ok(x)
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    LuFactor::new(a)?.solve(b)
}
