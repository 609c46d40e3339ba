use serde::{Deserialize, Serialize};

use super::{AhpError, PairwiseMatrix, RandomIndexTable, CR_THRESHOLD};

/// Weights plus every intermediate of the consistency check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritizationResult {
    pub labels: Vec<String>,
    /// Row geometric means.
    pub gm_vector: Vec<f64>,
    pub weights: Vec<f64>,
    /// `A · W`.
    pub weighted_sum: Vec<f64>,
    /// `(A · W)_i / W_i`.
    pub consistency_vector: Vec<f64>,
    pub lambda_max: f64,
    pub ci: f64,
    pub ri: f64,
    pub cr: f64,
}

impl PrioritizationResult {
    pub fn is_acceptable(&self) -> bool {
        self.cr <= CR_THRESHOLD
    }

    pub fn weight_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.weights[i])
    }
}

/// `X_k = (prod_j a_kj)^(1/n)` for each row.
pub fn geometric_mean_vector(m: &PairwiseMatrix) -> Vec<f64> {
    let n = m.n() as f64;
    m.rows()
        .map(|row| (row.iter().map(|v| v.ln()).sum::<f64>() / n).exp())
        .collect()
}

/// Scales `x` to sum to one.
pub fn normalize_weights(x: &[f64]) -> Vec<f64> {
    let total: f64 = x.iter().sum();
    x.iter().map(|v| v / total).collect()
}

/// Matrix-vector product `A · W`.
pub fn weighted_sum_vector(m: &PairwiseMatrix, weights: &[f64]) -> Result<Vec<f64>, AhpError> {
    if weights.len() != m.n() {
        return Err(AhpError::DimensionMismatch {
            expected: m.n(),
            found: weights.len(),
        });
    }
    Ok(m.rows()
        .map(|row| row.iter().zip(weights).map(|(a, w)| a * w).sum())
        .collect())
}

pub fn consistency_vector(weighted_sum: &[f64], weights: &[f64]) -> Vec<f64> {
    weighted_sum.iter().zip(weights).map(|(s, w)| s / w).collect()
}

/// Mean of the consistency vector.
pub fn lambda_max(cv: &[f64]) -> f64 {
    cv.iter().sum::<f64>() / cv.len() as f64
}

/// `(lambda - n) / (n - 1)`; zero when `n < 2`, where the ratio is undefined.
pub fn consistency_index(lambda: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    (lambda - n as f64) / (n as f64 - 1.0)
}

/// `CI / RI(n)`; zero whenever `RI(n)` is zero (n <= 2).
pub fn consistency_ratio(ci: f64, n: usize, table: &RandomIndexTable) -> Result<f64, AhpError> {
    let ri = table.get(n).ok_or(AhpError::UnsupportedDimension(n))?;
    if ri == 0.0 {
        return Ok(0.0);
    }
    Ok(ci / ri)
}

/// Runs the whole weight and consistency chain without applying the gate.
pub fn evaluate(m: &PairwiseMatrix, table: &RandomIndexTable) -> Result<PrioritizationResult, AhpError> {
    super::validate_pairwise(m)?;
    let n = m.n();
    let ri = table.get(n).ok_or(AhpError::UnsupportedDimension(n))?;
    let gm_vector = geometric_mean_vector(m);
    let weights = normalize_weights(&gm_vector);
    let weighted_sum = weighted_sum_vector(m, &weights)?;
    let consistency_vector = consistency_vector(&weighted_sum, &weights);
    let lambda_max = lambda_max(&consistency_vector);
    let ci = consistency_index(lambda_max, n);
    let cr = consistency_ratio(ci, n, table)?;
    Ok(PrioritizationResult {
        labels: m.labels().to_vec(),
        gm_vector,
        weights,
        weighted_sum,
        consistency_vector,
        lambda_max,
        ci,
        ri,
        cr,
    })
}

/// [`evaluate`] followed by the `CR <= 0.1` acceptance gate.
pub fn prioritize(m: &PairwiseMatrix, table: &RandomIndexTable) -> Result<PrioritizationResult, AhpError> {
    let result = evaluate(m, table)?;
    if result.is_acceptable() {
        Ok(result)
    } else {
        Err(AhpError::InconsistentMatrix(Box::new(result)))
    }
}
