//! Detection and resolution of conflicting IoT service requests in
//! multi-resident homes.
//!
//! The pipeline turns raw sensor logs into service events ([`ingest`]),
//! finds overlapping divergent requests ([`detection`]), ranks the residents
//! involved with the analytic hierarchy process ([`ahp`],
//! [`prioritization`]) and blends their preferences into one setpoint
//! ([`resolution`]). [`evaluation`] compares strategies by simulation.

pub mod ahp;
pub mod detection;
pub mod domain;
pub mod evaluation;
pub mod eventcsv;
pub mod ingest;
pub mod prioritization;
pub mod profiles;
pub mod resolution;
pub mod scenarios;

pub use ahp::{PairwiseMatrix, PrioritizationResult, RandomIndexTable};
pub use domain::{
    AttrValue, AttributeSpec, ConflictCase, ConflictType, DomainError, Interval, Participant, ProfileMap, ResidentId,
    ResidentProfile, ResolutionDecision, Service, ServiceCatalog, ServiceEvent, ServiceEventLog, ServiceId, Strategy,
};
pub use prioritization::{Criterion, Ranking, RankingOptions, ResidentWeight};
pub use resolution::StrategyConfig;
