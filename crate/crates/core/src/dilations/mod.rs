//! Constructive dilations: matrices on a larger product space whose partial
//! traces reproduce prescribed targets.
//!
//! Factor 0 is always the system; the remaining factors form the ancilla. For
//! joint dilations on `d_A ⊗ d_B`, tracing the ancilla gives `A` and tracing
//! the system gives `B`.

mod flanders;
mod joint;
mod structured;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use flanders::{
    flanders_similar, joint_rank_one_dilation, purify, segre_at_zero, FlandersVerdict,
    JordanBlock, JordanSpec, Purification, SegreCharacteristic, SegreEstimate,
};
pub use joint::{
    adjust_dilation_rank, check_dimension_constraint, joint_rank_two_dilation,
    shoda_decomposition, ShodaDecomposition,
};
pub use structured::{
    constant_diagonal_form, idempotent_dilation, min_unitary_ancilla, nilpotent_dilation,
    normal_dilation, unitary_dilation, ConstantDiagonal,
};

use crate::error::Result;
use crate::json::MatrixJson;
use crate::matrix::{frobenius, DenseMatrix};
use crate::tensor::{marginal, partial_trace, FactorSet, TensorSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Normal,
    Unitary,
    Nilpotent,
    Idempotent,
    RankOne,
    RankTwo,
    RankR,
}

#[derive(Debug, Clone)]
pub struct DilationResult {
    pub m: DenseMatrix,
    pub space: TensorSpace,
    pub structure: Structure,
    /// Residuals keyed by name; every entry is expected to be small.
    pub certificates: BTreeMap<String, f64>,
}

impl DilationResult {
    fn new(m: DenseMatrix, space: TensorSpace, structure: Structure) -> Self {
        Self {
            m,
            space,
            structure,
            certificates: BTreeMap::new(),
        }
    }

    fn certify(mut self, key: &str, value: f64) -> Self {
        self.certificates.insert(key.to_string(), value);
        self
    }

    /// Partial trace over the ancilla (everything but factor 0).
    pub fn system_marginal(&self) -> Result<DenseMatrix> {
        if self.space.len() == 1 {
            return Ok(self.m.clone());
        }
        partial_trace(&self.m, &self.space, &FactorSet::new((1..self.space.len()).collect(), self.space.len())?)
    }

    /// Partial trace over the system factor.
    pub fn ancilla_marginal(&self) -> Result<DenseMatrix> {
        partial_trace(&self.m, &self.space, &FactorSet::single(0, self.space.len())?)
    }

    pub fn certificate(&self, key: &str) -> Option<f64> {
        self.certificates.get(key).copied()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "matrix": MatrixJson::from_matrix(&self.m).with_space(&self.space),
            "structure": self.structure,
            "certificates": self.certificates,
        })
    }
}

fn residual(actual: &DenseMatrix, target: &DenseMatrix) -> f64 {
    if actual.shape() != target.shape() {
        return f64::INFINITY;
    }
    frobenius(&(actual - target))
}

fn marginal_residual(m: &DenseMatrix, space: &TensorSpace, keep: usize, target: &DenseMatrix) -> Result<f64> {
    Ok(residual(&marginal(m, space, keep)?, target))
}
