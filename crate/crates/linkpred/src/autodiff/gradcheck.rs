//! Finite-difference gradient verification.
//!
//! For every parameter entry the analytic gradient from the tape is
//! compared against the central difference `(f(p+eps) - f(p-eps)) /
//! (2 eps)`. The builder closure must be deterministic (dropout off);
//! two forward passes that disagree are reported as a usage error.

use crate::scalar::Scalar;

use super::{DiffError, ParameterStore, Tape, TensorId};

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub entries_checked: usize,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= self.tol
    }
}

/// Checks analytic gradients of the scalar loss built by `build`
/// against central differences over every entry of every parameter.
pub fn grad_check<F, B>(
    store: &mut ParameterStore<F>,
    eps: F,
    tol: f64,
    mut build: B,
) -> Result<GradCheckReport, DiffError>
where
    F: Scalar,
    B: FnMut(&ParameterStore<F>) -> Result<(Tape<F>, TensorId), DiffError>,
{
    if eps <= F::zero() {
        return Err(DiffError::InvalidEps(eps.as_f64()));
    }

    let eval = |store: &ParameterStore<F>, build: &mut B| -> Result<F, DiffError> {
        let (tape, loss) = build(store)?;
        tape.scalar(loss)
    };

    let first = eval(store, &mut build)?;
    let second = eval(store, &mut build)?;
    if first.as_f64().to_bits() != second.as_f64().to_bits() {
        return Err(DiffError::NonDeterministic {
            first: first.as_f64(),
            second: second.as_f64(),
        });
    }

    store.zero_grads();
    let (tape, loss) = build(store)?;
    tape.backward(loss, store)?;
    drop(tape);

    let names: Vec<String> = store.names().map(String::from).collect();
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        entries_checked: 0,
        tol,
    };

    for name in &names {
        let len = store.value(name)?.len();
        let analytic: Vec<f64> = store.grad(name)?.data().iter().map(|g| g.as_f64()).collect();
        for i in 0..len {
            let original = store.value(name)?.data()[i];

            store.value_mut(name)?.data_mut()[i] = original + eps;
            let plus = eval(store, &mut build)?;
            store.value_mut(name)?.data_mut()[i] = original - eps;
            let minus = eval(store, &mut build)?;
            store.value_mut(name)?.data_mut()[i] = original;

            let numeric = (plus.as_f64() - minus.as_f64()) / (2.0 * eps.as_f64());
            let a = analytic[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            report.entries_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = name.clone();
                report.worst_index = i;
                report.analytic_at_worst = a;
                report.numeric_at_worst = numeric;
            }
        }
    }
    Ok(report)
}
