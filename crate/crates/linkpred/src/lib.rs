pub mod autodiff;
pub mod encoder;
pub mod graph;
pub mod heuristics;
pub mod metrics;
pub mod objective;
pub mod predictor;
pub mod sampling;
pub mod scalar;
#[cfg(test)]
pub(crate) mod testutil;
