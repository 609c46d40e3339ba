use serde::{Deserialize, Serialize};

use super::{
    evaluate, validate_pairwise, AhpError, PairwiseMatrix, PrioritizationResult, RandomIndexTable, SCALE_MAX, SCALE_MIN,
};

/// Revised matrix plus the consistency ratio observed before each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionTrace {
    pub matrix: PairwiseMatrix,
    /// `cr_history[0]` is the input's CR, the last entry the output's.
    pub cr_history: Vec<f64>,
    /// `(row, col)` replaced in each round.
    pub replaced: Vec<(usize, usize)>,
}

impl RevisionTrace {
    pub fn iterations(&self) -> usize {
        self.replaced.len()
    }
}

/// Revises an inconsistent matrix one judgement at a time until CR <= 0.1.
///
/// Each round tries two replacements for every upper-triangle entry: the
/// indirect judgement `exp(mean_k ln(a_ik * a_kj))` over the other criteria
/// (clamped to the 1-9 scale), and the current weight ratio `W_i/W_j`. The
/// candidate with the lowest resulting CR is kept. A round that cannot
/// lower CR ends the revision with [`AhpError::RevisionDiverged`], so the
/// recorded CR history is strictly decreasing.
pub fn revise_matrix(
    m: &PairwiseMatrix,
    table: &RandomIndexTable,
    max_iters: usize,
) -> Result<RevisionTrace, AhpError> {
    let mut current = m.clone();
    let mut result = evaluate(&current, table)?;
    let mut trace = RevisionTrace {
        matrix: current.clone(),
        cr_history: vec![result.cr],
        replaced: Vec::new(),
    };
    let n = current.n();

    while !result.is_acceptable() {
        if trace.replaced.len() >= max_iters {
            return Err(AhpError::RevisionDiverged {
                iterations: trace.replaced.len(),
                cr: result.cr,
            });
        }
        let mut best: Option<(PairwiseMatrix, PrioritizationResult, (usize, usize))> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let log_indirect = (0..n)
                    .filter(|&k| k != i && k != j)
                    .map(|k| (current.get(i, k) * current.get(k, j)).ln())
                    .sum::<f64>()
                    / (n - 2) as f64;
                let indirect = log_indirect.exp().clamp(SCALE_MIN, SCALE_MAX);
                let ratio = result.weights[i] / result.weights[j];
                for value in [indirect, ratio] {
                    let mut trial = current.clone();
                    trial.set_pair(i, j, value);
                    let trial_result = evaluate(&trial, table)?;
                    if best.as_ref().is_none_or(|(_, b, _)| trial_result.cr < b.cr) {
                        best = Some((trial, trial_result, (i, j)));
                    }
                }
            }
        }
        match best {
            Some((next, next_result, pair)) if next_result.cr < result.cr => {
                current = next;
                result = next_result;
                trace.cr_history.push(result.cr);
                trace.replaced.push(pair);
            }
            _ => {
                return Err(AhpError::RevisionDiverged {
                    iterations: trace.replaced.len(),
                    cr: result.cr,
                })
            }
        }
    }
    trace.matrix = current;
    Ok(trace)
}

/// Entrywise geometric mean of several judges' matrices.
///
/// The upper triangle is averaged and the lower triangle set to exact
/// reciprocals, so the result is always a valid reciprocal matrix.
pub fn aggregate_group(ms: &[PairwiseMatrix]) -> Result<PairwiseMatrix, AhpError> {
    let first = ms.first().ok_or(AhpError::EmptyGroup)?;
    let n = first.n();
    for m in ms {
        validate_pairwise(m)?;
        if m.n() != n {
            return Err(AhpError::DimensionMismatch {
                expected: n,
                found: m.n(),
            });
        }
        if m.labels() != first.labels() {
            return Err(AhpError::LabelMismatch);
        }
    }
    let q = ms.len() as f64;
    let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let log_mean = ms.iter().map(|m| m.get(i, j).ln()).sum::<f64>() / q;
            upper.push(log_mean.exp());
        }
    }
    PairwiseMatrix::from_upper(first.labels().to_vec(), &upper)
}
