//! Compressed sparse row storage for one quasi-charge Hamiltonian block.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Real symmetric sparse matrix in CSR layout (both triangles stored).
#[derive(Debug, Clone)]
pub struct SparseBlock {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseBlock {
    /// Assemble from per-row `(col, value)` lists, sorting columns in place.
    pub fn from_rows(mut rows: Vec<Vec<(u32, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseBlock {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        let mut acc = 0.0;
        for j in lo..hi {
            acc += self.values[j] * x[self.col_idx[j] as usize];
        }
        acc
    }

    /// `y = A x`. Row-parallel when the `parallel` feature is on; each row is
    /// summed sequentially so the result does not depend on the worker count.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        #[cfg(feature = "parallel")]
        {
            if self.dim >= 8192 {
                y.par_iter_mut()
                    .enumerate()
                    .for_each(|(i, yi)| *yi = self.row_dot(i, x));
                return;
            }
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    /// Largest absolute asymmetry `max |A − Aᵀ|`; diagnostic for tests.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[j] as usize;
                let v = self.values[j];
                let vt = self.entry(c, i);
                worst = worst.max((v - vt).abs());
            }
        }
        worst
    }

    /// Value at `(i, j)`, zero if not stored.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&(j as u32)) {
            Ok(p) => self.values[lo + p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[j] as usize)] = self.values[j];
            }
        }
        m
    }

    /// Gershgorin upper bound on the spectral radius; used to scale solver
    /// tolerances.
    pub fn gershgorin_bound(&self) -> f64 {
        let mut bound = 0.0_f64;
        for i in 0..self.dim {
            let mut radius = 0.0;
            for j in self.row_ptr[i]..self.row_ptr[i + 1] {
                radius += self.values[j].abs();
            }
            bound = bound.max(radius);
        }
        bound.max(1.0)
    }
}
