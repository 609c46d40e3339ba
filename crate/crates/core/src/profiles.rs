//! Resident profile configuration.
//!
//! Profiles are listed explicitly; any missing field is drawn uniformly
//! from a configured range with a seeded generator, so augmented profiles
//! are reproducible. Context episodes record when a resident was, for
//! example, ill, which lets history be read under a given context.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DomainError, Interval, ProfileMap, ResidentId, ResidentProfile, MAX_SEVERITY};
use crate::prioritization::Criterion;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profiles: {0}")]
    Parse(String),
    #[error("resident `{0}` has unset fields but no seed is configured")]
    MissingSeed(ResidentId),
    #[error("resident `{0}` listed twice")]
    Duplicate(ResidentId),
    #[error("home `{0}` assigned to more than one resident")]
    DuplicateHome(String),
    #[error("range for {field} is invalid: {lo}..={hi}")]
    BadRange { field: &'static str, lo: u32, hi: u32 },
    #[error("episode for unknown resident `{0}`")]
    UnknownResident(ResidentId),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

impl ProfileError {
    pub fn code(&self) -> &'static str {
        match self {
            ProfileError::Parse(_) => "profiles::Parse",
            ProfileError::MissingSeed(_) => "profiles::MissingSeed",
            ProfileError::Duplicate(_) => "profiles::Duplicate",
            ProfileError::DuplicateHome(_) => "profiles::DuplicateHome",
            ProfileError::BadRange { .. } => "profiles::BadRange",
            ProfileError::UnknownResident(_) => "profiles::UnknownResident",
            ProfileError::Domain(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidentEntry {
    pub id: ResidentId,
    /// Source home label whose readings belong to this resident.
    #[serde(default)]
    pub home: Option<String>,
    pub age: Option<u32>,
    pub visual_impairment: Option<u8>,
    pub hearing_impairment: Option<u8>,
    pub illness: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingRanges {
    pub age: (u32, u32),
    pub visual_impairment: (u8, u8),
    pub hearing_impairment: (u8, u8),
    pub illness: (u8, u8),
}

impl Default for SamplingRanges {
    fn default() -> Self {
        SamplingRanges {
            age: (18, 90),
            visual_impairment: (0, MAX_SEVERITY),
            hearing_impairment: (0, MAX_SEVERITY),
            illness: (0, MAX_SEVERITY),
        }
    }
}

/// A period during which a resident's value on a criterion was elevated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEpisode {
    pub resident: ResidentId,
    pub criterion: Criterion,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

impl ContextEpisode {
    pub fn interval(&self) -> Result<Interval, DomainError> {
        Interval::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub ranges: SamplingRanges,
    #[serde(default)]
    pub residents: Vec<ResidentEntry>,
    #[serde(default)]
    pub episodes: Vec<ContextEpisode>,
}

/// Fully populated profiles plus home assignment and episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedProfiles {
    pub profiles: ProfileMap,
    /// Home label to resident.
    pub homes: BTreeMap<String, ResidentId>,
    pub episodes: Vec<ContextEpisode>,
}

impl ProfileConfig {
    pub fn from_toml(text: &str) -> Result<Self, ProfileError> {
        toml::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))
    }

    /// Fills missing fields. Draws happen in resident order, then field
    /// order (age, VI, HI, illness), and only for missing fields.
    pub fn resolve(&self) -> Result<ResolvedProfiles, ProfileError> {
        let r = &self.ranges;
        for (field, lo, hi, max) in [
            ("age", r.age.0, r.age.1, u32::MAX),
            (
                "visual_impairment",
                r.visual_impairment.0 as u32,
                r.visual_impairment.1 as u32,
                10,
            ),
            (
                "hearing_impairment",
                r.hearing_impairment.0 as u32,
                r.hearing_impairment.1 as u32,
                10,
            ),
            ("illness", r.illness.0 as u32, r.illness.1 as u32, 10),
        ] {
            if lo > hi || hi > max {
                return Err(ProfileError::BadRange { field, lo, hi });
            }
        }

        let mut rng = self.seed.map(ChaCha8Rng::seed_from_u64);
        let mut profiles = ProfileMap::new();
        let mut homes = BTreeMap::new();
        for entry in &self.residents {
            let complete = entry.age.is_some()
                && entry.visual_impairment.is_some()
                && entry.hearing_impairment.is_some()
                && entry.illness.is_some();
            if !complete && rng.is_none() {
                return Err(ProfileError::MissingSeed(entry.id.clone()));
            }
            let mut draw_u32 = |v: Option<u32>, (lo, hi): (u32, u32)| {
                v.unwrap_or_else(|| rng.as_mut().expect("seed checked").random_range(lo..=hi))
            };
            let age = draw_u32(entry.age, r.age);
            let vi = draw_u32(entry.visual_impairment.map(u32::from), widen(r.visual_impairment));
            let hi = draw_u32(entry.hearing_impairment.map(u32::from), widen(r.hearing_impairment));
            let ill = draw_u32(entry.illness.map(u32::from), widen(r.illness));
            let profile = ResidentProfile::new(entry.id.clone(), age, narrow(vi), narrow(hi), narrow(ill))?;
            if profiles.insert(entry.id.clone(), profile).is_some() {
                return Err(ProfileError::Duplicate(entry.id.clone()));
            }
            if let Some(home) = &entry.home {
                if homes.insert(home.clone(), entry.id.clone()).is_some() {
                    return Err(ProfileError::DuplicateHome(home.clone()));
                }
            }
        }
        for ep in &self.episodes {
            if !profiles.contains_key(&ep.resident) {
                return Err(ProfileError::UnknownResident(ep.resident.clone()));
            }
            ep.interval()?;
        }
        Ok(ResolvedProfiles {
            profiles,
            homes,
            episodes: self.episodes.clone(),
        })
    }
}

fn widen((lo, hi): (u8, u8)) -> (u32, u32) {
    (lo as u32, hi as u32)
}

fn narrow(v: u32) -> u8 {
    u8::try_from(v).unwrap_or(u8::MAX)
}
