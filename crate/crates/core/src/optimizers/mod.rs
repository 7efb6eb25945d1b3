//! Classical optimizers over flat parameter vectors.

mod bfgs;
mod ga;

pub use bfgs::{bfgs_minimize, finite_difference_gradient, BfgsOptions};
pub use ga::{ga_minimize, GaConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite parameter vector, `[A_1..A_n, phi_1..phi_n]` for pulse problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i} is {}", values[i])));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ParameterVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    CostTolerance,
    MaxIterations,
    LineSearchFailed,
    NonFiniteCost,
    Generations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub best_params: ParameterVector,
    pub best_cost: f64,
    /// BFGS: cost at every accepted iterate, starting point included.
    /// GA: best cost of each generation.
    pub cost_history: Vec<f64>,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub seed: Option<u64>,
}
