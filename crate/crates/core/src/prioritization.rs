//! Resident ranking: choose a criteria matrix for the conflict type, score
//! residents per criterion, and synthesize one weight per resident.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::{self, AhpError, PairwiseMatrix, PrioritizationResult, RandomIndexTable};
use crate::domain::{ConflictCase, ConflictType, ProfileMap, ResidentId, ResidentProfile};

/// Contextual criteria in canonical matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Age,
    #[serde(rename = "VI")]
    VisualImpairment,
    #[serde(rename = "HI")]
    HearingImpairment,
    Illness,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::Age,
        Criterion::VisualImpairment,
        Criterion::HearingImpairment,
        Criterion::Illness,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::Age => "Age",
            Criterion::VisualImpairment => "VI",
            Criterion::HearingImpairment => "HI",
            Criterion::Illness => "Illness",
        }
    }

    pub fn from_label(label: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.label() == label)
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Criterion that dominates the template for a conflict type.
    pub fn emphasized_for(conflict_type: &ConflictType) -> Option<Criterion> {
        match conflict_type {
            ConflictType::Temperature => Some(Criterion::Illness),
            ConflictType::Illumination => Some(Criterion::VisualImpairment),
            ConflictType::Audio => Some(Criterion::HearingImpairment),
            ConflictType::Other(_) => None,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn criterion_labels() -> Vec<String> {
    Criterion::ALL.iter().map(|c| c.label().to_owned()).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrioritizationError {
    #[error("resident `{0}` has no profile")]
    UnknownResident(ResidentId),
    #[error("template override for `{key}` rejected: {source}")]
    InvalidOverride {
        key: String,
        #[source]
        source: AhpError,
    },
    #[error("template override for `{key}` must use labels Age, VI, HI, Illness")]
    OverrideLabels { key: String },
    #[error("no residents to rank")]
    NoResidents,
    #[error("smoothing offset must be positive, got {0}")]
    BadSmoothing(f64),
    #[error(transparent)]
    Ahp(#[from] AhpError),
}

impl PrioritizationError {
    pub fn code(&self) -> &'static str {
        match self {
            PrioritizationError::UnknownResident(_) => "prioritization::UnknownResident",
            PrioritizationError::InvalidOverride { .. } => "prioritization::InvalidOverride",
            PrioritizationError::OverrideLabels { .. } => "prioritization::OverrideLabels",
            PrioritizationError::NoResidents => "prioritization::NoResidents",
            PrioritizationError::BadSmoothing(_) => "prioritization::BadSmoothing",
            PrioritizationError::Ahp(e) => e.code(),
        }
    }
}

/// The built-in temperature criteria matrix (illness dominant).
pub fn reference_criteria_matrix() -> PairwiseMatrix {
    PairwiseMatrix::from_scale(
        criterion_labels(),
        &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 7.0, 1.0, 1.0 / 5.0, 1.0 / 5.0],
    )
    .expect("reference matrix is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaTemplate {
    pub conflict_type: ConflictType,
    pub matrix: PairwiseMatrix,
}

/// User-supplied criteria matrices keyed by `temperature`, `illumination`,
/// `audio` or `other`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateOverrides(pub BTreeMap<String, PairwiseMatrix>);

fn template_key(conflict_type: &ConflictType) -> &'static str {
    match conflict_type {
        ConflictType::Temperature => "temperature",
        ConflictType::Illumination => "illumination",
        ConflictType::Audio => "audio",
        ConflictType::Other(_) => "other",
    }
}

/// Selects the criteria matrix for a conflict type.
///
/// Temperature uses the reference matrix. Illumination and audio swap the
/// illness role with VI or HI respectively. Anything else gets the uniform
/// matrix. An override for the type's key replaces the built-in matrix and
/// must pass validation and the CR gate.
pub fn criteria_matrix_for(
    conflict_type: &ConflictType,
    overrides: Option<&TemplateOverrides>,
    table: &RandomIndexTable,
) -> Result<CriteriaTemplate, PrioritizationError> {
    let key = template_key(conflict_type);
    if let Some(m) = overrides.and_then(|o| o.0.get(key)) {
        let matrix = canonicalize_override(key, m)?;
        ahp::prioritize(&matrix, table).map_err(|source| PrioritizationError::InvalidOverride {
            key: key.to_owned(),
            source,
        })?;
        return Ok(CriteriaTemplate {
            conflict_type: conflict_type.clone(),
            matrix,
        });
    }
    let reference = reference_criteria_matrix();
    let matrix = match Criterion::emphasized_for(conflict_type) {
        Some(Criterion::Illness) => reference,
        Some(emphasized) => {
            let mut perm: Vec<usize> = (0..4).collect();
            perm.swap(emphasized.index(), Criterion::Illness.index());
            let swapped = reference.permuted(&perm)?;
            PairwiseMatrix::new(criterion_labels(), swapped.to_rows())?
        }
        None => PairwiseMatrix::uniform(criterion_labels())?,
    };
    Ok(CriteriaTemplate {
        conflict_type: conflict_type.clone(),
        matrix,
    })
}

fn canonicalize_override(key: &str, m: &PairwiseMatrix) -> Result<PairwiseMatrix, PrioritizationError> {
    let bad = || PrioritizationError::OverrideLabels { key: key.to_owned() };
    if m.n() != 4 {
        return Err(bad());
    }
    let perm = Criterion::ALL
        .iter()
        .map(|c| m.labels().iter().position(|l| l == c.label()).ok_or_else(bad))
        .collect::<Result<Vec<_>, _>>()?;
    m.permuted(&perm).map_err(|_| bad())
}

/// Parameters of the raw-value to pairwise-judgement mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    /// Offset added to both raw values before taking their ratio.
    pub smoothing: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            smoothing: 1.0,
            clamp_min: ahp::SCALE_MIN,
            clamp_max: ahp::SCALE_MAX,
        }
    }
}

/// Alternative-level comparison matrix for one criterion.
///
/// `a_ij = clamp((v_i + d) / (v_j + d), 1/9, 9)` for `i < j`, with the lower
/// triangle set to the exact reciprocal. Higher raw values mean higher
/// priority on every criterion.
pub fn score_residents(
    profiles: &[&ResidentProfile],
    criterion: Criterion,
    scoring: &ScoringConfig,
) -> Result<PairwiseMatrix, PrioritizationError> {
    if profiles.is_empty() {
        return Err(PrioritizationError::NoResidents);
    }
    if !scoring.smoothing.is_finite() || scoring.smoothing <= 0.0 {
        return Err(PrioritizationError::BadSmoothing(scoring.smoothing));
    }
    let values: Vec<f64> = profiles
        .iter()
        .map(|p| p.criterion_value(criterion) + scoring.smoothing)
        .collect();
    let mut upper = Vec::new();
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            upper.push((values[i] / values[j]).clamp(scoring.clamp_min, scoring.clamp_max));
        }
    }
    let labels = profiles.iter().map(|p| p.resident_id.0.clone()).collect();
    Ok(PairwiseMatrix::from_upper(labels, &upper)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidentWeight {
    pub resident_id: ResidentId,
    pub raw_weight: f64,
    pub normalized_weight: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionPriorities {
    pub criterion: Criterion,
    pub matrix: PairwiseMatrix,
    pub result: PrioritizationResult,
}

/// Everything that went into a ranking, for audit output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDiagnostics {
    pub conflict_type: ConflictType,
    pub criteria_matrix: PairwiseMatrix,
    pub criteria: PrioritizationResult,
    pub alternatives: Vec<CriterionPriorities>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub case_id: String,
    /// Rank order.
    pub weights: Vec<ResidentWeight>,
    pub diagnostics: RankingDiagnostics,
}

/// Options shared by every ranking call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankingOptions {
    pub overrides: Option<TemplateOverrides>,
    pub random_index: RandomIndexTable,
    pub scoring: ScoringConfig,
}

/// Ranks the participants of a conflict case.
///
/// Criteria weights come from the conflict type's template, which must pass
/// the consistency gate; per-criterion resident weights come from
/// [`score_residents`]. Each resident's raw weight is the criteria-weighted
/// sum of their per-criterion weights.
pub fn rank_residents(
    case: &ConflictCase,
    profiles: &ProfileMap,
    opts: &RankingOptions,
) -> Result<Ranking, PrioritizationError> {
    let participants = case
        .participants
        .iter()
        .map(|p| {
            profiles
                .get(&p.resident_id)
                .ok_or_else(|| PrioritizationError::UnknownResident(p.resident_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (weights, diagnostics) = rank_profiles(&case.conflict_type, &participants, opts)?;
    Ok(Ranking {
        case_id: case.id.clone(),
        weights,
        diagnostics,
    })
}

/// Ranking core over explicit profiles, independent of any conflict case.
pub fn rank_profiles(
    conflict_type: &ConflictType,
    profiles: &[&ResidentProfile],
    opts: &RankingOptions,
) -> Result<(Vec<ResidentWeight>, RankingDiagnostics), PrioritizationError> {
    if profiles.is_empty() {
        return Err(PrioritizationError::NoResidents);
    }
    let template = criteria_matrix_for(conflict_type, opts.overrides.as_ref(), &opts.random_index)?;
    let criteria = ahp::prioritize(&template.matrix, &opts.random_index)?;

    let mut raw = vec![0.0; profiles.len()];
    let mut alternatives = Vec::with_capacity(Criterion::ALL.len());
    for criterion in Criterion::ALL {
        let matrix = score_residents(profiles, criterion, &opts.scoring)?;
        // Derived matrices are only inconsistent where clamping bites; their
        // CR is reported in the diagnostics rather than gated.
        let result = ahp::evaluate(&matrix, &opts.random_index)?;
        let cw = criteria.weights[criterion.index()];
        for (acc, w) in raw.iter_mut().zip(&result.weights) {
            *acc += cw * w;
        }
        alternatives.push(CriterionPriorities {
            criterion,
            matrix,
            result,
        });
    }

    let total: f64 = raw.iter().sum();
    let mut weights: Vec<ResidentWeight> = profiles
        .iter()
        .zip(&raw)
        .map(|(p, &r)| ResidentWeight {
            resident_id: p.resident_id.clone(),
            raw_weight: r,
            normalized_weight: r / total,
            rank: 0,
        })
        .collect();
    sort_by_weight(&mut weights);
    for (i, w) in weights.iter_mut().enumerate() {
        w.rank = i + 1;
    }
    Ok((
        weights,
        RankingDiagnostics {
            conflict_type: conflict_type.clone(),
            criteria_matrix: template.matrix,
            criteria,
            alternatives,
        },
    ))
}

const TIE_TOL: f64 = 1e-12;

/// Descending weight; weights within 1e-12 tie and fall back to resident id.
pub fn sort_by_weight(weights: &mut [ResidentWeight]) {
    weights.sort_by(|a, b| {
        if (a.normalized_weight - b.normalized_weight).abs() <= TIE_TOL {
            a.resident_id.cmp(&b.resident_id)
        } else {
            b.normalized_weight.total_cmp(&a.normalized_weight)
        }
    });
}
