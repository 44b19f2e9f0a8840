//! SGD and Adam updates with decoupled L2 weight decay.
//!
//! The decay term `lambda * p` is added to the gradient before the
//! update, which under SGD matches differentiating `lambda/2 * ||p||^2`
//! directly. Gradients are zeroed after every step.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{DiffError, ParameterStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimMethod {
    Sgd,
    Adam,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Applies one optimizer step to every parameter, consuming the
/// accumulated gradients.
pub fn optimizer_step<F: Scalar>(
    store: &mut ParameterStore<F>,
    method: OptimMethod,
    lr: F,
    lambda: F,
) -> Result<(), DiffError> {
    if lr <= F::zero() {
        return Err(DiffError::InvalidLearningRate(lr.as_f64()));
    }
    if lambda < F::zero() {
        return Err(DiffError::InvalidWeightDecay(lambda.as_f64()));
    }
    if method == OptimMethod::Adam {
        store.adam_steps += 1;
    }
    let t = store.adam_steps;
    for (_, param) in store.params_mut() {
        match method {
            OptimMethod::Sgd => {
                let n = param.value.len();
                for i in 0..n {
                    let g = param.grad.data()[i] + lambda * param.value.data()[i];
                    param.value.data_mut()[i] = param.value.data()[i] - lr * g;
                }
            }
            OptimMethod::Adam => {
                let (rows, cols) = param.value.shape();
                let m = param.moment1.get_or_insert_with(|| Tensor::zeros(rows, cols));
                let v = param.moment2.get_or_insert_with(|| Tensor::zeros(rows, cols));
                let b1 = F::cast(ADAM_BETA1);
                let b2 = F::cast(ADAM_BETA2);
                let eps = F::cast(ADAM_EPS);
                let bias1 = F::one() - F::cast(ADAM_BETA1.powi(t as i32));
                let bias2 = F::one() - F::cast(ADAM_BETA2.powi(t as i32));
                for i in 0..param.value.len() {
                    let g = param.grad.data()[i] + lambda * param.value.data()[i];
                    let mi = b1 * m.data()[i] + (F::one() - b1) * g;
                    let vi = b2 * v.data()[i] + (F::one() - b2) * g * g;
                    m.data_mut()[i] = mi;
                    v.data_mut()[i] = vi;
                    let m_hat = mi / bias1;
                    let v_hat = vi / bias2;
                    param.value.data_mut()[i] =
                        param.value.data()[i] - lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        param.grad.fill(F::zero());
    }
    Ok(())
}
