use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::OperatorSpec;
use crate::spaces::Coeffs;
use crate::C_ZERO;

/// Sparse column storage of the finite section `(<T e_j, e_i>)_{i,j < dim}`.
#[derive(Debug, Clone)]
pub struct Section {
    dim: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl Section {
    pub fn build(t: &OperatorSpec, dim: usize) -> Self {
        let cols = (0..dim)
            .map(|j| {
                let e = Coeffs::basis(j).with_dim_hint(dim);
                t.apply(&e).iter().take_while(|&(i, _)| i < dim).collect()
            })
            .collect();
        Section { dim, cols }
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let dim = m.nrows();
        let cols = (0..dim)
            .map(|j| {
                (0..dim)
                    .filter_map(|i| {
                        let v = m[(i, j)];
                        (v != C_ZERO).then_some((i, v))
                    })
                    .collect()
            })
            .collect();
        Section { dim, cols }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> &[(usize, Complex64)] {
        &self.cols[j]
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![C_ZERO; self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            let xj = x[j];
            if xj == C_ZERO {
                continue;
            }
            for &(i, v) in col {
                y[i] += v * xj;
            }
        }
        y
    }

    /// `M^T f` (transpose, no conjugation).
    pub fn tmul(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(i, v)| v * f[i]).sum())
            .collect()
    }

    /// Rows as sparse lists.
    pub fn rows(&self) -> Vec<Vec<(usize, Complex64)>> {
        let mut rows = vec![Vec::new(); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                rows[i].push((j, v));
            }
        }
        rows
    }

    /// The diagonal, when every off-diagonal entry vanishes.
    pub fn diagonal(&self) -> Option<Vec<Complex64>> {
        let mut d = vec![C_ZERO; self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                if i != j {
                    return None;
                }
                d[j] = v;
            }
        }
        Some(d)
    }

    pub fn is_real(&self) -> bool {
        self.cols.iter().flatten().all(|(_, v)| v.im == 0.0)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, C_ZERO);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Dense `dim x dim` section with `M[i][j] = <T e_j, e_i>`.
pub fn truncate_matrix(t: &OperatorSpec, dim: usize) -> DMatrix<Complex64> {
    Section::build(t, dim).to_dense()
}

/// Column-major CSV with header `row,col,re,im`.
pub fn matrix_csv(m: &DMatrix<Complex64>) -> String {
    let mut s = String::from("row,col,re,im\n");
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            let _ = writeln!(s, "{i},{j},{:e},{:e}", v.re, v.im);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CatalogEntry, OperatorSpec};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn identity_section() {
        assert_eq!(
            truncate_matrix(&OperatorSpec::Identity, 3),
            DMatrix::identity(3, 3)
        );
    }

    #[test]
    fn tc0_section() {
        let m = truncate_matrix(&OperatorSpec::Catalog(CatalogEntry::Tc0), 3);
        let want = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0),
                c(0.5),
                c(0.25),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
            ],
        );
        assert_eq!(m, want);
    }

    #[test]
    fn simple_s_section() {
        let m = truncate_matrix(
            &OperatorSpec::Catalog(CatalogEntry::SimpleS { p: 2.0, q: 4.0 }),
            4,
        );
        let mut want = DMatrix::from_element(4, 4, c(0.0));
        want[(0, 1)] = c(1.0);
        want[(1, 0)] = c(1.0);
        want[(2, 2)] = c(2.0 / 3.0);
        want[(3, 3)] = c(0.75);
        assert_eq!(m, want);
    }

    #[test]
    fn csv_is_column_major() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let s = matrix_csv(&m);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "row,col,re,im");
        assert_eq!(lines[1], "0,0,1e0,0e0");
        assert_eq!(lines[2], "1,0,3e0,0e0");
        assert_eq!(lines[3], "0,1,2e0,0e0");
    }
}
