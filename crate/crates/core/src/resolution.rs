//! Setpoint computation for a conflict case: the priority-weighted blend and
//! the fair-principle, use-first and static-priority baselines.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AttrValue, ConflictCase, ResidentId, ResolutionDecision, Strategy};
use crate::prioritization::{Ranking, ResidentWeight};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolutionError {
    #[error("attribute `{0}` is not numeric and cannot be blended")]
    NonNumericAttribute(String),
    #[error("participant `{0}` is missing from the static priority order")]
    UnrankedParticipant(ResidentId),
    #[error("ranking does not cover exactly the case participants")]
    RankingMismatch,
    #[error("static priority order lists `{0}` twice")]
    DuplicateInOrder(ResidentId),
    #[error("strategy `{0}` needs {1}")]
    MissingInput(Strategy, &'static str),
    #[error("granularity must be positive, got {0}")]
    BadGranularity(f64),
}

impl ResolutionError {
    pub fn code(&self) -> &'static str {
        match self {
            ResolutionError::NonNumericAttribute(_) => "resolution::NonNumericAttribute",
            ResolutionError::UnrankedParticipant(_) => "resolution::UnrankedParticipant",
            ResolutionError::RankingMismatch => "resolution::RankingMismatch",
            ResolutionError::DuplicateInOrder(_) => "resolution::DuplicateInOrder",
            ResolutionError::MissingInput(..) => "resolution::MissingInput",
            ResolutionError::BadGranularity(_) => "resolution::BadGranularity",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    /// Round to the granularity step on the side of the top-ranked
    /// resident's preference.
    #[default]
    DirectionalTowardTopRank,
    Nearest,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub rounding: Rounding,
    /// Rounding step in the attribute's unit.
    pub granularity: f64,
    pub static_order: Option<Vec<ResidentId>>,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            rounding: Rounding::default(),
            granularity: 1.0,
            static_order: None,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<(), ResolutionError> {
        if !(self.granularity > 0.0 && self.granularity.is_finite()) {
            return Err(ResolutionError::BadGranularity(self.granularity));
        }
        if let Some(order) = &self.static_order {
            let mut seen = BTreeSet::new();
            if let Some(dup) = order.iter().find(|r| !seen.insert(*r)) {
                return Err(ResolutionError::DuplicateInOrder(dup.clone()));
            }
        }
        Ok(())
    }
}

fn numeric(case: &ConflictCase) -> Result<Vec<f64>, ResolutionError> {
    case.numeric_preferences()
        .ok_or_else(|| ResolutionError::NonNumericAttribute(case.attribute.clone()))
}

fn decision(case: &ConflictCase, strategy: Strategy, setpoint: AttrValue, raw: Option<f64>) -> ResolutionDecision {
    ResolutionDecision {
        case_id: case.id.clone(),
        strategy,
        attribute: case.attribute.clone(),
        setpoint,
        raw,
        ranking: Vec::new(),
        diagnostics: None,
    }
}

/// Snaps values within 1e-9 steps of a grid point onto it so that float
/// noise never pushes an exact blend across a rounding boundary.
fn snap(value: f64, step: f64) -> f64 {
    let q = value / step;
    if (q - q.round()).abs() < 1e-9 {
        q.round() * step
    } else {
        value
    }
}

/// Applies the rounding mode to a blended value and clamps it to the
/// preference interval.
pub fn round_setpoint(raw: f64, top_preference: f64, bounds: (f64, f64), cfg: &StrategyConfig) -> f64 {
    let step = cfg.granularity;
    let value = snap(raw, step);
    let rounded = match cfg.rounding {
        Rounding::None => raw,
        Rounding::Nearest => (value / step).round() * step,
        Rounding::DirectionalTowardTopRank => {
            if top_preference > value {
                (value / step).ceil() * step
            } else if top_preference < value {
                (value / step).floor() * step
            } else {
                value
            }
        }
    };
    rounded.clamp(bounds.0, bounds.1)
}

/// Priority-weighted blend of the participants' preferences.
pub fn resolve_adaptive(
    case: &ConflictCase,
    ranking: &[ResidentWeight],
    cfg: &StrategyConfig,
) -> Result<ResolutionDecision, ResolutionError> {
    cfg.validate()?;
    let prefs = numeric(case)?;
    let ranked: BTreeSet<_> = ranking.iter().map(|w| &w.resident_id).collect();
    let participants: BTreeSet<_> = case.participants.iter().map(|p| &p.resident_id).collect();
    if ranked != participants || ranking.len() != case.participants.len() {
        return Err(ResolutionError::RankingMismatch);
    }

    let mut raw = 0.0;
    for w in ranking {
        let idx = case
            .participants
            .iter()
            .position(|p| p.resident_id == w.resident_id)
            .expect("sets compared above");
        raw += w.normalized_weight * prefs[idx];
    }
    let lo = prefs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = prefs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = raw.clamp(lo, hi);

    let top = ranking.iter().min_by_key(|w| w.rank).expect("non-empty ranking");
    let top_pref = case
        .participant(&top.resident_id)
        .and_then(|p| p.preferred.as_number())
        .expect("numeric checked above");
    let setpoint = round_setpoint(raw, top_pref, (lo, hi), cfg);

    let mut d = decision(case, Strategy::Adaptive, AttrValue::Number(setpoint), Some(raw));
    d.ranking = ranking.to_vec();
    Ok(d)
}

/// [`resolve_adaptive`] with the ranking's diagnostics attached.
pub fn resolve_ranked(
    case: &ConflictCase,
    ranking: &Ranking,
    cfg: &StrategyConfig,
) -> Result<ResolutionDecision, ResolutionError> {
    let mut d = resolve_adaptive(case, &ranking.weights, cfg)?;
    d.diagnostics = Some(ranking.diagnostics.clone());
    Ok(d)
}

/// Fair principle: the arithmetic mean, unrounded.
pub fn resolve_average(case: &ConflictCase) -> Result<ResolutionDecision, ResolutionError> {
    let prefs = numeric(case)?;
    let mean = prefs.iter().sum::<f64>() / prefs.len() as f64;
    Ok(decision(case, Strategy::Average, AttrValue::Number(mean), Some(mean)))
}

/// Whoever started first keeps their preference; ties go to the smaller
/// resident id.
pub fn resolve_use_first(case: &ConflictCase) -> Result<ResolutionDecision, ResolutionError> {
    let first = case
        .participants
        .iter()
        .min_by(|a, b| a.start.cmp(&b.start).then_with(|| a.resident_id.cmp(&b.resident_id)))
        .ok_or(ResolutionError::RankingMismatch)?;
    Ok(decision(case, Strategy::UseFirst, first.preferred.clone(), None))
}

/// The highest participant in a fixed order wins outright.
pub fn resolve_static_priority(
    case: &ConflictCase,
    order: &[ResidentId],
) -> Result<ResolutionDecision, ResolutionError> {
    if let Some(p) = case.participants.iter().find(|p| !order.contains(&p.resident_id)) {
        return Err(ResolutionError::UnrankedParticipant(p.resident_id.clone()));
    }
    let winner = order
        .iter()
        .find_map(|id| case.participant(id))
        .ok_or(ResolutionError::RankingMismatch)?;
    Ok(decision(case, Strategy::StaticPriority, winner.preferred.clone(), None))
}

/// Dispatches on strategy. `ranking` is required for [`Strategy::Adaptive`],
/// `cfg.static_order` for [`Strategy::StaticPriority`].
pub fn resolve(
    case: &ConflictCase,
    strategy: Strategy,
    ranking: Option<&Ranking>,
    cfg: &StrategyConfig,
) -> Result<ResolutionDecision, ResolutionError> {
    match strategy {
        Strategy::Adaptive => {
            let ranking = ranking.ok_or(ResolutionError::MissingInput(strategy, "a resident ranking"))?;
            resolve_ranked(case, ranking, cfg)
        }
        Strategy::Average => resolve_average(case),
        Strategy::UseFirst => resolve_use_first(case),
        Strategy::StaticPriority => {
            cfg.validate()?;
            let order = cfg
                .static_order
                .as_deref()
                .ok_or(ResolutionError::MissingInput(strategy, "a static priority order"))?;
            resolve_static_priority(case, order)
        }
    }
}
