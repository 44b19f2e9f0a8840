//! Dense row-major 2-D tensor value type.

use crate::scalar::Scalar;

use super::DiffError;

/// Dense `rows x cols` matrix of scalars. Plain value type; gradient
/// bookkeeping lives in the tape and the parameter store.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: F) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self, DiffError> {
        if data.len() != rows * cols {
            return Err(DiffError::DataLength {
                len: data.len(),
                rows,
                cols,
            });
        }
        Ok(Tensor { rows, cols, data })
    }

    /// Row vector (`1 x n`) from a slice.
    pub fn row_vector(data: &[F]) -> Self {
        Tensor {
            rows: 1,
            cols: data.len(),
            data: data.to_vec(),
        }
    }

    /// Column vector (`n x 1`) from a slice.
    pub fn column_vector(data: &[F]) -> Self {
        Tensor {
            rows: data.len(),
            cols: 1,
            data: data.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: F) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Tensor<F> {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Tensor<F> {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Tensor<F>) -> Result<Tensor<F>, DiffError> {
        if self.cols != rhs.rows {
            return Err(DiffError::ShapeMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: rhs.shape(),
            });
        }
        let mut out = Tensor::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == F::zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self += scale * other`, shapes must match.
    pub fn add_scaled(&mut self, other: &Tensor<F>, scale: F) -> Result<(), DiffError> {
        if self.shape() != other.shape() {
            return Err(DiffError::ShapeMismatch {
                op: "add_scaled",
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn fill(&mut self, v: F) {
        self.data.fill(v);
    }
}
