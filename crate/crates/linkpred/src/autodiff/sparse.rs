//! Compressed sparse row matrix used for adjacency operators.
//!
//! Sparse operands are constants in the compute graph (adjacency never
//! carries gradients), so only dense-side derivatives are needed.

use crate::scalar::Scalar;

use super::{DiffError, Tensor};

#[derive(Debug, Clone)]
pub struct SparseMatrix<F> {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<F>,
}

impl<F: Scalar> SparseMatrix<F> {
    /// Builds from `(row, col, value)` triplets; rows need not be sorted.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, F)],
    ) -> SparseMatrix<F> {
        let mut offsets = vec![0usize; rows + 1];
        for &(r, _, _) in triplets {
            offsets[r + 1] += 1;
        }
        for i in 1..=rows {
            offsets[i] += offsets[i - 1];
        }
        let mut cursor = offsets.clone();
        let mut indices = vec![0usize; triplets.len()];
        let mut values = vec![F::zero(); triplets.len()];
        let mut sorted = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (r, c, v) in sorted {
            let at = cursor[r];
            indices[at] = c;
            values[at] = v;
            cursor[r] += 1;
        }
        SparseMatrix {
            rows,
            cols,
            offsets,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, F)> + '_ {
        self.indices[self.offsets[r]..self.offsets[r + 1]]
            .iter()
            .copied()
            .zip(self.values[self.offsets[r]..self.offsets[r + 1]].iter().copied())
    }

    /// Dense product `self * x`.
    pub fn mul_dense(&self, x: &Tensor<F>) -> Result<Tensor<F>, DiffError> {
        if self.cols != x.rows() {
            return Err(DiffError::ShapeMismatch {
                op: "spmm",
                lhs: (self.rows, self.cols),
                rhs: x.shape(),
            });
        }
        let d = x.cols();
        let mut out = Tensor::zeros(self.rows, d);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                let src = &x.data()[c * d..(c + 1) * d];
                let dst = &mut out.data_mut()[r * d..(r + 1) * d];
                for (o, &s) in dst.iter_mut().zip(src) {
                    *o = *o + v * s;
                }
            }
        }
        Ok(out)
    }

    /// Dense product with the transpose, `self^T * g`, computed by
    /// scattering over the stored entries.
    pub fn mul_dense_transposed(&self, g: &Tensor<F>) -> Result<Tensor<F>, DiffError> {
        if self.rows != g.rows() {
            return Err(DiffError::ShapeMismatch {
                op: "spmm_transposed",
                lhs: (self.cols, self.rows),
                rhs: g.shape(),
            });
        }
        let d = g.cols();
        let mut out = Tensor::zeros(self.cols, d);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                for k in 0..d {
                    let cur = out.get(c, k);
                    out.set(c, k, cur + v * g.get(r, k));
                }
            }
        }
        Ok(out)
    }
}
