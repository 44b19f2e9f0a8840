//! Tape-based reverse-mode differentiation over dense 2-D tensors.
//!
//! A [`Tape`] records every primitive executed during a forward pass.
//! [`Tape::backward`] replays the chain rule in reverse and accumulates
//! gradients into the [`ParameterStore`] entries referenced by
//! [`Tape::param`] leaves. Intermediate gradients are transient; only
//! parameter gradients survive the call.
//!
//! The closed primitive set: dense matmul, sparse-dense matmul, add
//! (with row-broadcast bias), elementwise multiply, horizontal
//! concatenation, relu (max-with-zero), sigmoid, softplus, square,
//! scale/add-scalar, subtract, row-sum/mean, full-sum/mean, row gather,
//! and dropout with inverted scaling.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::Rng;

use crate::scalar::Scalar;

use super::{DiffError, ParameterStore, SparseMatrix, Tensor};

/// Forward-pass mode; dropout is active only in [`Mode::Train`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Handle to a tensor recorded on a specific tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId {
    tape: u64,
    index: usize,
}

enum Op<F> {
    Constant,
    Param(String),
    Matmul(usize, usize),
    Spmm(Arc<SparseMatrix<F>>, usize),
    Add { a: usize, b: usize, broadcast: bool },
    Sub(usize, usize),
    Mul(usize, usize),
    ConcatCols(usize, usize),
    Relu(usize),
    Sigmoid(usize),
    Softplus(usize),
    Square(usize),
    Scale(usize, F),
    AddScalar(usize),
    RowSum(usize),
    RowMean(usize),
    SumAll(usize),
    MeanAll(usize),
    GatherRows(usize, Vec<usize>),
    Dropout(usize, Vec<F>),
}

struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
    requires_grad: bool,
}

static TAPE_COUNTER: AtomicU64 = AtomicU64::new(0);

pub struct Tape<F> {
    id: u64,
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Tape<F> {
    pub fn new() -> Self {
        Tape {
            id: TAPE_COUNTER.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every recorded node, releasing all intermediates.
    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    fn node(&self, id: TensorId) -> Result<&Node<F>, DiffError> {
        if id.tape != self.id || id.index >= self.nodes.len() {
            return Err(DiffError::ForeignTensor);
        }
        Ok(&self.nodes[id.index])
    }

    pub fn value(&self, id: TensorId) -> Result<&Tensor<F>, DiffError> {
        Ok(&self.node(id)?.value)
    }

    pub fn shape(&self, id: TensorId) -> Result<(usize, usize), DiffError> {
        Ok(self.node(id)?.value.shape())
    }

    /// Value of a `1x1` tensor.
    pub fn scalar(&self, id: TensorId) -> Result<F, DiffError> {
        let t = self.value(id)?;
        if t.shape() != (1, 1) {
            return Err(DiffError::NotScalar {
                rows: t.rows(),
                cols: t.cols(),
            });
        }
        Ok(t.get(0, 0))
    }

    fn push(&mut self, op_name: &'static str, value: Tensor<F>, op: Op<F>, requires_grad: bool) -> Result<TensorId, DiffError> {
        if !value.is_finite() {
            return Err(DiffError::NonFinite { op: op_name });
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(TensorId {
            tape: self.id,
            index: self.nodes.len() - 1,
        })
    }

    /// Records a constant leaf; gradients never flow into it.
    pub fn constant(&mut self, value: Tensor<F>) -> Result<TensorId, DiffError> {
        self.push("constant", value, Op::Constant, false)
    }

    /// Records a parameter leaf by copying the current value from the
    /// store; `backward` accumulates into the matching gradient buffer.
    pub fn param(&mut self, store: &ParameterStore<F>, name: &str) -> Result<TensorId, DiffError> {
        let value = store.value(name)?.clone();
        self.push("param", value, Op::Param(name.to_string()), true)
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, DiffError> {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        let value = na.value.matmul(&nb.value)?;
        let rg = na.requires_grad || nb.requires_grad;
        self.push("matmul", value, Op::Matmul(a.index, b.index), rg)
    }

    /// Sparse-dense product; the sparse operand is a constant.
    pub fn spmm(&mut self, m: &Arc<SparseMatrix<F>>, x: TensorId) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let value = m.mul_dense(&nx.value)?;
        let rg = nx.requires_grad;
        self.push("spmm", value, Op::Spmm(Arc::clone(m), x.index), rg)
    }

    /// Elementwise addition; `b` may be a `1 x cols` row vector, which is
    /// broadcast across the rows of `a` (bias add).
    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, DiffError> {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        let (va, vb) = (&na.value, &nb.value);
        let broadcast = vb.rows() == 1 && va.rows() != 1 && vb.cols() == va.cols();
        if !broadcast && va.shape() != vb.shape() {
            return Err(DiffError::ShapeMismatch {
                op: "add",
                lhs: va.shape(),
                rhs: vb.shape(),
            });
        }
        let mut value = va.clone();
        for r in 0..value.rows() {
            let src = if broadcast { vb.row(0) } else { vb.row(r) };
            for (c, &s) in src.iter().enumerate() {
                let cur = value.get(r, c);
                value.set(r, c, cur + s);
            }
        }
        let rg = na.requires_grad || nb.requires_grad;
        self.push(
            "add",
            value,
            Op::Add {
                a: a.index,
                b: b.index,
                broadcast,
            },
            rg,
        )
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, DiffError> {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        if na.value.shape() != nb.value.shape() {
            return Err(DiffError::ShapeMismatch {
                op: "sub",
                lhs: na.value.shape(),
                rhs: nb.value.shape(),
            });
        }
        let data = na
            .value
            .data()
            .iter()
            .zip(nb.value.data())
            .map(|(&x, &y)| x - y)
            .collect();
        let value = Tensor::from_vec(na.value.rows(), na.value.cols(), data)?;
        let rg = na.requires_grad || nb.requires_grad;
        self.push("sub", value, Op::Sub(a.index, b.index), rg)
    }

    /// Hadamard (elementwise) product.
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, DiffError> {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        if na.value.shape() != nb.value.shape() {
            return Err(DiffError::ShapeMismatch {
                op: "mul",
                lhs: na.value.shape(),
                rhs: nb.value.shape(),
            });
        }
        let data = na
            .value
            .data()
            .iter()
            .zip(nb.value.data())
            .map(|(&x, &y)| x * y)
            .collect();
        let value = Tensor::from_vec(na.value.rows(), na.value.cols(), data)?;
        let rg = na.requires_grad || nb.requires_grad;
        self.push("mul", value, Op::Mul(a.index, b.index), rg)
    }

    /// Horizontal concatenation `[a | b]`.
    pub fn concat_cols(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, DiffError> {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        if na.value.rows() != nb.value.rows() {
            return Err(DiffError::ShapeMismatch {
                op: "concat_cols",
                lhs: na.value.shape(),
                rhs: nb.value.shape(),
            });
        }
        let (rows, ca, cb) = (na.value.rows(), na.value.cols(), nb.value.cols());
        let mut value = Tensor::zeros(rows, ca + cb);
        for r in 0..rows {
            for c in 0..ca {
                value.set(r, c, na.value.get(r, c));
            }
            for c in 0..cb {
                value.set(r, ca + c, nb.value.get(r, c));
            }
        }
        let rg = na.requires_grad || nb.requires_grad;
        self.push("concat_cols", value, Op::ConcatCols(a.index, b.index), rg)
    }

    /// Elementwise max with zero.
    pub fn relu(&mut self, x: TensorId) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let value = nx.value.map(|v| if v > F::zero() { v } else { F::zero() });
        let rg = nx.requires_grad;
        self.push("relu", value, Op::Relu(x.index), rg)
    }

    pub fn sigmoid(&mut self, x: TensorId) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let value = nx.value.map(stable_sigmoid);
        let rg = nx.requires_grad;
        self.push("sigmoid", value, Op::Sigmoid(x.index), rg)
    }

    /// `ln(1 + exp(x))` in its overflow-free form.
    pub fn softplus(&mut self, x: TensorId) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let value = nx.value.map(stable_softplus);
        let rg = nx.requires_grad;
        self.push("softplus", value, Op::Softplus(x.index), rg)
    }

    pub fn square(&mut self, x: TensorId) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let value = nx.value.map(|v| v * v);
        let rg = nx.requires_grad;
        self.push("square", value, Op::Square(x.index), rg)
    }

    pub fn scale(&mut self, x: TensorId, c: F) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let value = nx.value.map(|v| v * c);
        let rg = nx.requires_grad;
        self.push("scale", value, Op::Scale(x.index, c), rg)
    }

    pub fn add_scalar(&mut self, x: TensorId, c: F) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let value = nx.value.map(|v| v + c);
        let rg = nx.requires_grad;
        self.push("add_scalar", value, Op::AddScalar(x.index), rg)
    }

    /// Per-row sum, `n x d -> n x 1`.
    pub fn row_sum(&mut self, x: TensorId) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let data = (0..nx.value.rows())
            .map(|r| nx.value.row(r).iter().copied().sum())
            .collect();
        let value = Tensor::from_vec(nx.value.rows(), 1, data)?;
        let rg = nx.requires_grad;
        self.push("row_sum", value, Op::RowSum(x.index), rg)
    }

    /// Per-row mean, `n x d -> n x 1`.
    pub fn row_mean(&mut self, x: TensorId) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let d = F::cast(nx.value.cols() as f64);
        let data = (0..nx.value.rows())
            .map(|r| nx.value.row(r).iter().copied().sum::<F>() / d)
            .collect();
        let value = Tensor::from_vec(nx.value.rows(), 1, data)?;
        let rg = nx.requires_grad;
        self.push("row_mean", value, Op::RowMean(x.index), rg)
    }

    /// Sum over all entries, producing a `1x1` scalar.
    pub fn sum_all(&mut self, x: TensorId) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let total = nx.value.data().iter().copied().sum();
        let value = Tensor::from_vec(1, 1, vec![total])?;
        let rg = nx.requires_grad;
        self.push("sum_all", value, Op::SumAll(x.index), rg)
    }

    /// Mean over all entries, producing a `1x1` scalar.
    pub fn mean_all(&mut self, x: TensorId) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        let n = F::cast(nx.value.len() as f64);
        let total = nx.value.data().iter().copied().sum::<F>() / n;
        let value = Tensor::from_vec(1, 1, vec![total])?;
        let rg = nx.requires_grad;
        self.push("mean_all", value, Op::MeanAll(x.index), rg)
    }

    /// Selects rows by index (embedding lookup); duplicate indices are
    /// allowed and their gradients accumulate.
    pub fn gather_rows(&mut self, x: TensorId, indices: &[usize]) -> Result<TensorId, DiffError> {
        let nx = self.node(x)?;
        for &i in indices {
            if i >= nx.value.rows() {
                return Err(DiffError::RowOutOfRange {
                    index: i,
                    rows: nx.value.rows(),
                });
            }
        }
        let cols = nx.value.cols();
        let mut value = Tensor::zeros(indices.len(), cols);
        for (r, &i) in indices.iter().enumerate() {
            for c in 0..cols {
                value.set(r, c, nx.value.get(i, c));
            }
        }
        let rg = nx.requires_grad;
        self.push(
            "gather_rows",
            value,
            Op::GatherRows(x.index, indices.to_vec()),
            rg,
        )
    }

    /// Inverted dropout: in train mode each entry is zeroed with
    /// probability `p` and survivors are scaled by `1/(1-p)`, so eval
    /// mode is a pure pass-through.
    pub fn dropout(
        &mut self,
        x: TensorId,
        p: f64,
        mode: Mode,
        rng: &mut StdRng,
    ) -> Result<TensorId, DiffError> {
        if !(0.0..1.0).contains(&p) {
            return Err(DiffError::InvalidDropout { p });
        }
        self.node(x)?;
        if mode == Mode::Eval || p == 0.0 {
            return Ok(x);
        }
        let nx = &self.nodes[x.index];
        let keep_scale = F::cast(1.0 / (1.0 - p));
        let mask: Vec<F> = (0..nx.value.len())
            .map(|_| {
                if rng.random::<f64>() < p {
                    F::zero()
                } else {
                    keep_scale
                }
            })
            .collect();
        let data = nx
            .value
            .data()
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| v * m)
            .collect();
        let value = Tensor::from_vec(nx.value.rows(), nx.value.cols(), data)?;
        let rg = nx.requires_grad;
        self.push("dropout", value, Op::Dropout(x.index, mask), rg)
    }

    /// Propagates `d loss / d p` into the gradient buffer of every
    /// parameter reachable from `loss`. Gradients accumulate across
    /// calls; intermediates are freed when the propagation ends.
    pub fn backward(&self, loss: TensorId, store: &mut ParameterStore<F>) -> Result<(), DiffError> {
        if self.nodes.is_empty() {
            return Err(DiffError::EmptyTape);
        }
        let loss_node = self.node(loss)?;
        if loss_node.value.shape() != (1, 1) {
            return Err(DiffError::NotScalar {
                rows: loss_node.value.rows(),
                cols: loss_node.value.cols(),
            });
        }
        if !loss_node.requires_grad {
            // Loss does not depend on any parameter; all gradients are zero.
            return Ok(());
        }

        let mut grads: Vec<Option<Tensor<F>>> = (0..=loss.index).map(|_| None).collect();
        grads[loss.index] = Some(Tensor::filled(1, 1, F::one()));

        for idx in (0..=loss.index).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Constant => {}
                Op::Param(name) => store.accumulate_grad(name, &grad)?,
                Op::Matmul(a, b) => {
                    if self.nodes[*a].requires_grad {
                        let da = grad.matmul(&self.nodes[*b].value.transpose())?;
                        accumulate(&mut grads, *a, da)?;
                    }
                    if self.nodes[*b].requires_grad {
                        let db = self.nodes[*a].value.transpose().matmul(&grad)?;
                        accumulate(&mut grads, *b, db)?;
                    }
                }
                Op::Spmm(m, x) => {
                    if self.nodes[*x].requires_grad {
                        accumulate(&mut grads, *x, m.mul_dense_transposed(&grad)?)?;
                    }
                }
                Op::Add { a, b, broadcast } => {
                    if self.nodes[*a].requires_grad {
                        accumulate(&mut grads, *a, grad.clone())?;
                    }
                    if self.nodes[*b].requires_grad {
                        let db = if *broadcast {
                            let mut col_sums = Tensor::zeros(1, grad.cols());
                            for r in 0..grad.rows() {
                                for c in 0..grad.cols() {
                                    let cur = col_sums.get(0, c);
                                    col_sums.set(0, c, cur + grad.get(r, c));
                                }
                            }
                            col_sums
                        } else {
                            grad.clone()
                        };
                        accumulate(&mut grads, *b, db)?;
                    }
                }
                Op::Sub(a, b) => {
                    if self.nodes[*a].requires_grad {
                        accumulate(&mut grads, *a, grad.clone())?;
                    }
                    if self.nodes[*b].requires_grad {
                        accumulate(&mut grads, *b, grad.map(|v| -v))?;
                    }
                }
                Op::Mul(a, b) => {
                    if self.nodes[*a].requires_grad {
                        let da = zip_mul(&grad, &self.nodes[*b].value);
                        accumulate(&mut grads, *a, da)?;
                    }
                    if self.nodes[*b].requires_grad {
                        let db = zip_mul(&grad, &self.nodes[*a].value);
                        accumulate(&mut grads, *b, db)?;
                    }
                }
                Op::ConcatCols(a, b) => {
                    let ca = self.nodes[*a].value.cols();
                    if self.nodes[*a].requires_grad {
                        let mut da = Tensor::zeros(grad.rows(), ca);
                        for r in 0..grad.rows() {
                            for c in 0..ca {
                                da.set(r, c, grad.get(r, c));
                            }
                        }
                        accumulate(&mut grads, *a, da)?;
                    }
                    if self.nodes[*b].requires_grad {
                        let cb = grad.cols() - ca;
                        let mut db = Tensor::zeros(grad.rows(), cb);
                        for r in 0..grad.rows() {
                            for c in 0..cb {
                                db.set(r, c, grad.get(r, ca + c));
                            }
                        }
                        accumulate(&mut grads, *b, db)?;
                    }
                }
                Op::Relu(x) => {
                    let dx = zip_with(&grad, &node.value, |g, y| {
                        if y > F::zero() {
                            g
                        } else {
                            F::zero()
                        }
                    });
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::Sigmoid(x) => {
                    let dx = zip_with(&grad, &node.value, |g, y| g * y * (F::one() - y));
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::Softplus(x) => {
                    let dx = zip_with(&grad, &self.nodes[*x].value, |g, v| g * stable_sigmoid(v));
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::Square(x) => {
                    let two = F::cast(2.0);
                    let dx = zip_with(&grad, &self.nodes[*x].value, |g, v| g * two * v);
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::Scale(x, c) => {
                    accumulate(&mut grads, *x, grad.map(|g| g * *c))?;
                }
                Op::AddScalar(x) => {
                    accumulate(&mut grads, *x, grad.clone())?;
                }
                Op::RowSum(x) => {
                    let src = &self.nodes[*x].value;
                    let mut dx = Tensor::zeros(src.rows(), src.cols());
                    for r in 0..src.rows() {
                        let g = grad.get(r, 0);
                        for c in 0..src.cols() {
                            dx.set(r, c, g);
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::RowMean(x) => {
                    let src = &self.nodes[*x].value;
                    let inv = F::one() / F::cast(src.cols() as f64);
                    let mut dx = Tensor::zeros(src.rows(), src.cols());
                    for r in 0..src.rows() {
                        let g = grad.get(r, 0) * inv;
                        for c in 0..src.cols() {
                            dx.set(r, c, g);
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::SumAll(x) => {
                    let src = &self.nodes[*x].value;
                    let dx = Tensor::filled(src.rows(), src.cols(), grad.get(0, 0));
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::MeanAll(x) => {
                    let src = &self.nodes[*x].value;
                    let g = grad.get(0, 0) / F::cast(src.len() as f64);
                    let dx = Tensor::filled(src.rows(), src.cols(), g);
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::GatherRows(x, indices) => {
                    let src = &self.nodes[*x].value;
                    let mut dx = Tensor::zeros(src.rows(), src.cols());
                    for (r, &i) in indices.iter().enumerate() {
                        for c in 0..src.cols() {
                            let cur = dx.get(i, c);
                            dx.set(i, c, cur + grad.get(r, c));
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::Dropout(x, mask) => {
                    let data = grad
                        .data()
                        .iter()
                        .zip(mask)
                        .map(|(&g, &m)| g * m)
                        .collect();
                    let dx = Tensor::from_vec(grad.rows(), grad.cols(), data)?;
                    accumulate(&mut grads, *x, dx)?;
                }
            }
        }
        Ok(())
    }
}

fn accumulate<F: Scalar>(
    grads: &mut [Option<Tensor<F>>],
    idx: usize,
    delta: Tensor<F>,
) -> Result<(), DiffError> {
    match &mut grads[idx] {
        Some(existing) => existing.add_scaled(&delta, F::one()),
        slot @ None => {
            *slot = Some(delta);
            Ok(())
        }
    }
}

fn zip_mul<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>) -> Tensor<F> {
    zip_with(a, b, |x, y| x * y)
}

fn zip_with<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>, f: impl Fn(F, F) -> F) -> Tensor<F> {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_vec(a.rows(), a.cols(), data).expect("shapes verified by caller")
}

fn stable_sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

fn stable_softplus<F: Scalar>(x: F) -> F {
    let zero = F::zero();
    let pos = if x > zero { x } else { zero };
    pos + (F::one() + (-x.abs()).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    type Store = ParameterStore<f64>;

    #[test]
    fn relu_clamps_negatives() {
        let mut tape = Tape::new();
        let x = tape
            .constant(Tensor::row_vector(&[-1.0, 0.0, 2.0]))
            .unwrap();
        let y = tape.relu(x).unwrap();
        assert_eq!(tape.value(y).unwrap().data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn dropout_with_p_zero_is_identity_in_both_modes() {
        let mut rng = StdRng::seed_from_u64(0);
        for mode in [Mode::Train, Mode::Eval] {
            let mut tape = Tape::new();
            let x = tape.constant(Tensor::row_vector(&[1.0, -2.0, 3.0])).unwrap();
            let y = tape.dropout(x, 0.0, mode, &mut rng).unwrap();
            assert_eq!(y, x);
        }
    }

    #[test]
    fn dropout_rejects_p_of_one() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::row_vector(&[1.0])).unwrap();
        let mut rng = StdRng::seed_from_u64(0);
        assert!(matches!(
            tape.dropout(x, 1.0, Mode::Train, &mut rng),
            Err(DiffError::InvalidDropout { .. })
        ));
    }

    #[test]
    fn dropout_train_mode_preserves_expectation() {
        // Keep-scaling: the mean over many seeded draws stays within 2%
        // of the input, elementwise (p = 0.3).
        let x = [1.0, -2.0, 0.5, 3.0];
        let draws = 10_000;
        let mut rng = StdRng::seed_from_u64(99);
        let mut sums = [0.0f64; 4];
        for _ in 0..draws {
            let mut tape = Tape::new();
            let xi = tape.constant(Tensor::row_vector(&x)).unwrap();
            let y = tape.dropout(xi, 0.3, Mode::Train, &mut rng).unwrap();
            for (s, v) in sums.iter_mut().zip(tape.value(y).unwrap().data()) {
                *s += v;
            }
        }
        for (s, v) in sums.iter().zip(&x) {
            let mean = s / draws as f64;
            assert!(
                (mean - v).abs() <= 0.02 * v.abs(),
                "expectation drifted: {mean} vs {v}"
            );
        }
    }

    #[test]
    fn backward_of_sum_of_matmul_gives_outer_gradient() {
        // loss = sum(W x) with fixed x: dW = 1 * x^T broadcast over rows.
        let mut store = Store::new();
        store
            .insert("w", Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap())
            .unwrap();
        let mut tape = Tape::new();
        let w = tape.param(&store, "w").unwrap();
        let x = tape
            .constant(Tensor::from_vec(2, 1, vec![5.0, -1.0]).unwrap())
            .unwrap();
        let wx = tape.matmul(w, x).unwrap();
        let loss = tape.sum_all(wx).unwrap();
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad("w").unwrap().data(), &[5.0, -1.0, 5.0, -1.0]);
    }

    #[test]
    fn gradient_of_unused_parameter_is_zero() {
        let mut store = Store::new();
        store.insert("used", Tensor::filled(1, 1, 2.0)).unwrap();
        store.insert("unused", Tensor::filled(1, 1, 3.0)).unwrap();
        let mut tape = Tape::new();
        let p = tape.param(&store, "used").unwrap();
        let loss = tape.square(p).unwrap();
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad("unused").unwrap().data(), &[0.0]);
        assert_eq!(store.grad("used").unwrap().data(), &[4.0]);
    }

    #[test]
    fn backward_twice_without_zeroing_doubles_gradients() {
        let mut store = Store::new();
        store.insert("p", Tensor::filled(1, 1, 3.0)).unwrap();
        let mut tape = Tape::new();
        let p = tape.param(&store, "p").unwrap();
        let loss = tape.square(p).unwrap();
        tape.backward(loss, &mut store).unwrap();
        let once = store.grad("p").unwrap().get(0, 0);
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad("p").unwrap().get(0, 0), 2.0 * once);
    }

    #[test]
    fn backward_rejects_foreign_tensor() {
        let mut a = Tape::<f64>::new();
        let mut b = Tape::<f64>::new();
        let pa = a.constant(Tensor::filled(1, 1, 1.0)).unwrap();
        let _ = b.constant(Tensor::filled(1, 1, 1.0)).unwrap();
        let mut store = Store::new();
        assert!(matches!(
            b.backward(pa, &mut store),
            Err(DiffError::ForeignTensor)
        ));
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::zeros(2, 2)).unwrap();
        let mut store = Store::new();
        assert!(matches!(
            tape.backward(x, &mut store),
            Err(DiffError::NotScalar { .. })
        ));
    }

    #[test]
    fn chain_through_gather_mul_and_mean() {
        // loss = mean(gather(E, [0, 0, 1]) ⊙ C); duplicate gathers accumulate.
        let mut store = Store::new();
        store
            .insert("e", Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap())
            .unwrap();
        let mut tape = Tape::new();
        let e = tape.param(&store, "e").unwrap();
        let g = tape.gather_rows(e, &[0, 0, 1]).unwrap();
        let c = tape
            .constant(Tensor::from_vec(3, 2, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap())
            .unwrap();
        let prod = tape.mul(g, c).unwrap();
        let loss = tape.mean_all(prod).unwrap();
        tape.backward(loss, &mut store).unwrap();
        // d/dE[0] = (1 + 2)/6, d/dE[1] = 3/6 per column.
        assert_eq!(store.grad("e").unwrap().data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn concat_splits_gradient_between_inputs() {
        let mut store = Store::new();
        store.insert("a", Tensor::filled(2, 1, 1.0)).unwrap();
        store.insert("b", Tensor::filled(2, 2, 1.0)).unwrap();
        let mut tape = Tape::new();
        let a = tape.param(&store, "a").unwrap();
        let b = tape.param(&store, "b").unwrap();
        let cat = tape.concat_cols(a, b).unwrap();
        let w = tape
            .constant(Tensor::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap())
            .unwrap();
        let out = tape.matmul(cat, w).unwrap();
        let loss = tape.sum_all(out).unwrap();
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad("a").unwrap().data(), &[1.0, 1.0]);
        assert_eq!(store.grad("b").unwrap().data(), &[2.0, 3.0, 2.0, 3.0]);
    }

    #[test]
    fn nonfinite_values_are_rejected() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::row_vector(&[1e308])).unwrap();
        let doubled = tape.add(x, x);
        assert!(matches!(doubled, Err(DiffError::NonFinite { .. })));
    }

    #[test]
    fn broadcast_bias_backward_sums_columns() {
        let mut store = Store::new();
        store.insert("bias", Tensor::row_vector(&[0.0, 0.0])).unwrap();
        let mut tape = Tape::new();
        let x = tape
            .constant(Tensor::from_vec(3, 2, vec![1.0; 6]).unwrap())
            .unwrap();
        let b = tape.param(&store, "bias").unwrap();
        let y = tape.add(x, b).unwrap();
        let loss = tape.sum_all(y).unwrap();
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.grad("bias").unwrap().data(), &[3.0, 3.0]);
    }
}
