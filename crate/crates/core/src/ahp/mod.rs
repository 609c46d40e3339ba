//! Analytic Hierarchy Process numerics: reciprocal comparison matrices,
//! geometric-mean prioritization, consistency diagnostics, matrix revision
//! and group aggregation.

mod matrix;
mod priority;
mod revise;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matrix::{validate_pairwise, PairwiseMatrix, SCALE_MAX, SCALE_MIN};
pub use priority::{
    consistency_index, consistency_ratio, consistency_vector, evaluate, geometric_mean_vector, lambda_max,
    normalize_weights, prioritize, weighted_sum_vector, PrioritizationResult,
};
pub use revise::{aggregate_group, revise_matrix, RevisionTrace};

/// Equality tolerance for reciprocity, weight sums and fixed points.
pub const EQ_TOL: f64 = 1e-9;
/// Largest acceptable consistency ratio.
pub const CR_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AhpError {
    #[error("matrix has no labels")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row},{col}) = {value} is not a positive finite number")]
    NonPositive { row: usize, col: usize, value: f64 },
    #[error("diagonal entry {index} = {value}, expected 1")]
    BadDiagonal { index: usize, value: f64 },
    #[error("entries ({row},{col}) and ({col},{row}) are not reciprocal (product {product})")]
    NonReciprocal { row: usize, col: usize, product: f64 },
    #[error("judgement {value} is outside the 1/9..9 scale")]
    OffScale { value: f64 },
    #[error("not a permutation")]
    BadPermutation,
    #[error("label sets differ between matrices")]
    LabelMismatch,
    #[error("no matrices to aggregate")]
    EmptyGroup,
    #[error("no random index for n = {0}")]
    UnsupportedDimension(usize),
    #[error("consistency ratio {:.5} exceeds {CR_THRESHOLD}", .0.cr)]
    InconsistentMatrix(Box<PrioritizationResult>),
    #[error("revision stopped after {iterations} iterations with CR {cr:.5}")]
    RevisionDiverged { iterations: usize, cr: f64 },
}

impl AhpError {
    pub fn code(&self) -> &'static str {
        match self {
            AhpError::Empty => "ahp::Empty",
            AhpError::DimensionMismatch { .. } => "ahp::DimensionMismatch",
            AhpError::NonPositive { .. } => "ahp::NonPositive",
            AhpError::BadDiagonal { .. } => "ahp::BadDiagonal",
            AhpError::NonReciprocal { .. } => "ahp::NonReciprocal",
            AhpError::OffScale { .. } => "ahp::OffScale",
            AhpError::BadPermutation => "ahp::BadPermutation",
            AhpError::LabelMismatch => "ahp::LabelMismatch",
            AhpError::EmptyGroup => "ahp::EmptyGroup",
            AhpError::UnsupportedDimension(_) => "ahp::UnsupportedDimension",
            AhpError::InconsistentMatrix(_) => "ahp::InconsistentMatrix",
            AhpError::RevisionDiverged { .. } => "ahp::RevisionDiverged",
        }
    }
}

/// Random consistency index by matrix dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomIndexTable {
    ri: BTreeMap<usize, f64>,
}

impl Default for RandomIndexTable {
    fn default() -> Self {
        let ri = [0.0, 0.0, 0.52, 0.9, 1.12, 1.24, 1.32, 1.41, 1.45];
        RandomIndexTable {
            ri: ri.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect(),
        }
    }
}

impl RandomIndexTable {
    /// Custom table; must cover n = 1..=9 with non-negative values.
    pub fn new(ri: BTreeMap<usize, f64>) -> Result<Self, AhpError> {
        for n in 1..=9 {
            match ri.get(&n) {
                Some(&v) if v >= 0.0 => {}
                _ => return Err(AhpError::UnsupportedDimension(n)),
            }
        }
        Ok(RandomIndexTable { ri })
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.ri.get(&n).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_values() {
        let t = RandomIndexTable::default();
        assert_eq!(t.get(1), Some(0.0));
        assert_eq!(t.get(4), Some(0.9));
        assert_eq!(t.get(9), Some(1.45));
        assert_eq!(t.get(10), None);
    }

    #[test]
    fn custom_table_must_cover_one_to_nine() {
        let mut m: BTreeMap<usize, f64> = RandomIndexTable::default().ri;
        assert!(RandomIndexTable::new(m.clone()).is_ok());
        m.remove(&7);
        assert_eq!(RandomIndexTable::new(m), Err(AhpError::UnsupportedDimension(7)));
    }
}
