//! Sparse symmetric matrices and the SPD direct solver used by every
//! Dirichlet and Schrödinger solve. Factorization is delegated to faer's
//! supernodal Cholesky with its fill-reducing ordering.

use std::collections::BTreeMap;
use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::{linalg::solvers::Llt, SparseColMat, Triplet};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};

/// Row-compressed symmetric matrix; both triangles are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds from accumulated upper-triangle entries `(i <= j) -> value`.
    pub fn from_upper(n: usize, upper: &BTreeMap<(usize, usize), f64>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &v) in upper {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SymmetricMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

static SEQUENTIAL: Once = Once::new();

/// Cholesky factor of a sparse SPD matrix.
pub struct SpdFactor {
    n: usize,
    llt: Option<Llt<usize, f64>>,
}

impl std::fmt::Debug for SpdFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdFactor").field("n", &self.n).finish()
    }
}

impl SpdFactor {
    /// Factorizes the matrix given by upper-triangle entries. Duplicate
    /// entries must already be summed.
    pub fn new(n: usize, upper: &BTreeMap<(usize, usize), f64>) -> Result<Self> {
        // Results must not depend on thread scheduling.
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
        if n == 0 {
            return Ok(SpdFactor { n, llt: None });
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = upper
            .iter()
            .flat_map(|(&(i, j), &v)| {
                let t = Triplet::new(i, j, v);
                let mirrored = (i != j).then(|| Triplet::new(j, i, v));
                std::iter::once(t).chain(mirrored)
            })
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
        let llt = mat
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Singular(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(SpdFactor { n, llt: Some(llt) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "right-hand side has the wrong length");
        let Some(llt) = &self.llt else {
            return Vec::new();
        };
        let b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = llt.solve(&b);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves for several right-hand sides at once; `columns[k]` is one rhs.
    pub fn solve_columns(&self, columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let Some(llt) = &self.llt else {
            return vec![Vec::new(); columns.len()];
        };
        let b = Mat::from_fn(self.n, columns.len(), |i, k| columns[k][i]);
        let x = llt.solve(&b);
        (0..columns.len())
            .map(|k| (0..self.n).map(|i| x[(i, k)]).collect())
            .collect()
    }

    /// Dense inverse, column by column. Intended for desk-scale sizes.
    pub fn inverse(&self) -> Vec<Vec<f64>> {
        let Some(llt) = &self.llt else {
            return Vec::new();
        };
        let x = llt.solve(Mat::<f64>::identity(self.n, self.n));
        (0..self.n)
            .map(|k| (0..self.n).map(|i| x[(i, k)]).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> BTreeMap<(usize, usize), f64> {
        let mut m = BTreeMap::new();
        for i in 0..n {
            m.insert((i, i), 2.0);
            if i + 1 < n {
                m.insert((i, i + 1), -1.0);
            }
        }
        m
    }

    #[test]
    fn solves_tridiagonal_system() {
        let n = 5;
        let f = SpdFactor::new(n, &path_laplacian(n)).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
        let a = SymmetricMatrix::from_upper(n, &path_laplacian(n));
        let x = f.solve(&a.mul_vec(&x_true));
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_fails() {
        let mut m = path_laplacian(3);
        m.insert((1, 1), -4.0);
        assert!(SpdFactor::new(3, &m).is_err());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let n = 4;
        let a = SymmetricMatrix::from_upper(n, &path_laplacian(n));
        let inv = SpdFactor::new(n, &path_laplacian(n)).unwrap().inverse();
        for (k, col) in inv.iter().enumerate() {
            let e = a.mul_vec(col);
            for (i, v) in e.iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }
}
