use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample, DistributionKind, DistributionSpec, EvaluationError, TIE_TOL};
use crate::domain::{ConflictCase, ProfileMap, ResidentId, ServiceEvent, Strategy};
use crate::prioritization::{rank_residents, Criterion, RankingOptions};
use crate::profiles::ContextEpisode;
use crate::resolution::{resolve, StrategyConfig};

pub const REPORT_HEADER: [&str; 5] = ["distribution", "batch_size", "strategy", "win_fraction", "seed"];

/// Location parameters for a conflict's ground-truth distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Participant favoured by the conflict's emphasized criterion.
    pub advantaged: Option<ResidentId>,
    /// Set when no usable history existed and the mean fell back to the
    /// midpoint of the preferences.
    pub fallback: bool,
}

impl DerivedParams {
    pub fn spec(&self, kind: DistributionKind, stddev: f64) -> DistributionSpec {
        match kind {
            DistributionKind::Normal => DistributionSpec::Normal {
                mean: self.mean,
                stddev,
            },
            DistributionKind::Uniform => DistributionSpec::Uniform {
                min: self.min,
                max: self.max,
            },
            DistributionKind::Triangular => DistributionSpec::Triangular {
                min: self.min,
                mode: self.mean.clamp(self.min, self.max),
                max: self.max,
            },
        }
    }
}

/// Estimates where the true best setpoint lies for a conflict.
///
/// The advantaged participant is the one scoring highest on the conflict
/// type's emphasized criterion (ties to the smaller id). Every other
/// participant contributes the mean value they chose for the same service
/// attribute in earlier history events that overlap one of their episodes
/// for that criterion. The mean is the average of the advantaged
/// participant's current preference and those historical means.
pub fn derive_distribution_params(
    case: &ConflictCase,
    profiles: &ProfileMap,
    history: &[ServiceEvent],
    episodes: &[ContextEpisode],
) -> Result<DerivedParams, EvaluationError> {
    let prefs = case
        .numeric_preferences()
        .ok_or_else(|| EvaluationError::NonNumeric(case.attribute.clone()))?;
    let min = prefs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = prefs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let midpoint = DerivedParams {
        mean: (min + max) / 2.0,
        min,
        max,
        advantaged: None,
        fallback: true,
    };

    let Some(criterion) = Criterion::emphasized_for(&case.conflict_type) else {
        return Ok(midpoint);
    };
    let value = |id: &ResidentId| profiles.get(id).map_or(0.0, |p| p.criterion_value(criterion));
    let Some((adv_idx, adv)) = case.participants.iter().enumerate().min_by(|(_, a), (_, b)| {
        value(&b.resident_id)
            .total_cmp(&value(&a.resident_id))
            .then_with(|| a.resident_id.cmp(&b.resident_id))
    }) else {
        return Ok(midpoint);
    };

    let mut terms = vec![prefs[adv_idx]];
    for p in case.participants.iter().filter(|p| p.resident_id != adv.resident_id) {
        let windows: Vec<_> = episodes
            .iter()
            .filter(|ep| ep.resident == p.resident_id && ep.criterion == criterion)
            .collect();
        let values: Vec<f64> = history
            .iter()
            .filter(|e| {
                e.user == p.resident_id
                    && e.service_id == case.service_id
                    && e.start < case.overlap.start
                    && windows.iter().any(|w| e.start < w.end && w.start < e.end)
            })
            .filter_map(|e| e.attrs.get(&case.attribute).and_then(|v| v.as_number()))
            .collect();
        if !values.is_empty() {
            terms.push(values.iter().sum::<f64>() / values.len() as f64);
        }
    }
    if terms.len() < 2 {
        return Ok(DerivedParams {
            advantaged: Some(adv.resident_id.clone()),
            ..midpoint
        });
    }
    Ok(DerivedParams {
        mean: terms.iter().sum::<f64>() / terms.len() as f64,
        min,
        max,
        advantaged: Some(adv.resident_id.clone()),
        fallback: false,
    })
}

/// One conflict's strategy setpoints and its ground-truth distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub setpoints: BTreeMap<Strategy, f64>,
    pub truth: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureOptions {
    pub strategies: Vec<Strategy>,
    pub ranking: RankingOptions,
    pub resolution: StrategyConfig,
    pub normal_stddev: f64,
    /// Compare the adaptive blend before rounding.
    pub raw_adaptive: bool,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions {
            strategies: vec![Strategy::Adaptive, Strategy::Average],
            ranking: RankingOptions::default(),
            resolution: StrategyConfig::default(),
            normal_stddev: 1.0,
            raw_adaptive: true,
        }
    }
}

/// Resolves a case under every requested strategy and pairs the setpoints
/// with a distribution derived from history.
pub fn fixture_from_case(
    case: &ConflictCase,
    profiles: &ProfileMap,
    history: &[ServiceEvent],
    episodes: &[ContextEpisode],
    kind: DistributionKind,
    opts: &FixtureOptions,
) -> Result<(Fixture, DerivedParams), EvaluationError> {
    let ranking = if opts.strategies.contains(&Strategy::Adaptive) {
        Some(rank_residents(case, profiles, &opts.ranking)?)
    } else {
        None
    };
    let mut setpoints = BTreeMap::new();
    for &strategy in &opts.strategies {
        let d = resolve(case, strategy, ranking.as_ref(), &opts.resolution)?;
        let value = match d.raw {
            Some(raw) if strategy == Strategy::Adaptive && opts.raw_adaptive => Some(raw),
            _ => d.setpoint.as_number(),
        };
        let value = value.ok_or_else(|| EvaluationError::NonNumeric(case.attribute.clone()))?;
        setpoints.insert(strategy, value);
    }
    let params = derive_distribution_params(case, profiles, history, episodes)?;
    let truth = params.spec(kind, opts.normal_stddev);
    truth.validate()?;
    Ok((
        Fixture {
            name: case.id.clone(),
            setpoints,
            truth,
        },
        params,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub label: String,
    pub seed: u64,
    pub batch_sizes: Vec<usize>,
    /// Credit order for ties: the first tied baseline wins.
    pub strategies: Vec<Strategy>,
    pub fixtures: Vec<Fixture>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvaluationError> {
        if self.strategies.len() < 2 {
            return Err(EvaluationError::TooFewStrategies);
        }
        if self.fixtures.is_empty() {
            return Err(EvaluationError::NoFixtures);
        }
        if self.batch_sizes.is_empty() || self.batch_sizes[0] == 0 || self.batch_sizes.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(EvaluationError::BadBatchSizes);
        }
        for f in &self.fixtures {
            f.truth.validate()?;
            for &s in &self.strategies {
                if !f.setpoints.contains_key(&s) {
                    return Err(EvaluationError::MissingSetpoint {
                        fixture: f.name.clone(),
                        strategy: s,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Strategy whose setpoint is nearest the truth. Distances within
/// [`TIE_TOL`] of the best tie, and a tie goes to the first baseline in
/// `setpoints` order.
pub fn run_trial(setpoints: &[(Strategy, f64)], truth: f64) -> Strategy {
    let best = setpoints
        .iter()
        .map(|(_, v)| (v - truth).abs())
        .fold(f64::INFINITY, f64::min);
    let mut tied = setpoints
        .iter()
        .filter(|(_, v)| (v - truth).abs() - best <= TIE_TOL)
        .map(|&(s, _)| s);
    let first = tied.next().expect("at least one strategy");
    if first.is_baseline() {
        first
    } else {
        tied.find(|s| s.is_baseline()).unwrap_or(first)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFraction {
    pub strategy: Strategy,
    pub win_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchAccuracy {
    pub batch_size: usize,
    pub wins: Vec<StrategyFraction>,
}

impl BatchAccuracy {
    pub fn fraction(&self, strategy: Strategy) -> Option<f64> {
        self.wins
            .iter()
            .find(|w| w.strategy == strategy)
            .map(|w| w.win_fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub distribution: String,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub batches: Vec<BatchAccuracy>,
}

impl AccuracyReport {
    pub fn batch(&self, size: usize) -> Option<&BatchAccuracy> {
        self.batches.iter().find(|b| b.batch_size == size)
    }
}

/// Runs `max(batch_sizes)` trials and reports win fractions over each
/// batch's prefix of trials.
///
/// Trial `t` uses fixture `t mod F` and a generator seeded with `seed` on
/// stream `t`, so the report is identical for any thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AccuracyReport, EvaluationError> {
    cfg.validate()?;
    let total = *cfg.batch_sizes.last().expect("validated");
    let fixtures: Vec<(Vec<(Strategy, f64)>, DistributionSpec)> = cfg
        .fixtures
        .iter()
        .map(|f| {
            let sp = cfg.strategies.iter().map(|s| (*s, f.setpoints[s])).collect();
            (sp, f.truth)
        })
        .collect();

    let winners: Vec<usize> = (0..total)
        .into_par_iter()
        .map(|t| {
            let (setpoints, truth) = &fixtures[t % fixtures.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let x = sample(truth, &mut rng);
            let w = run_trial(setpoints, x);
            cfg.strategies.iter().position(|s| *s == w).expect("winner is listed")
        })
        .collect();

    let mut counts = vec![0usize; cfg.strategies.len()];
    let mut done = 0;
    let mut batches = Vec::with_capacity(cfg.batch_sizes.len());
    for &size in &cfg.batch_sizes {
        for &w in &winners[done..size] {
            counts[w] += 1;
        }
        done = size;
        batches.push(BatchAccuracy {
            batch_size: size,
            wins: cfg
                .strategies
                .iter()
                .zip(&counts)
                .map(|(&strategy, &c)| StrategyFraction {
                    strategy,
                    win_fraction: c as f64 / size as f64,
                })
                .collect(),
        });
    }
    Ok(AccuracyReport {
        distribution: cfg.label.clone(),
        seed: cfg.seed,
        strategies: cfg.strategies.clone(),
        batches,
    })
}

/// Cell-wise mean of several reports with identical shape, labelled
/// `label`. The seed is taken from the first report.
pub fn aggregate_reports(reports: &[AccuracyReport], label: &str) -> Result<AccuracyReport, EvaluationError> {
    let first = reports.first().ok_or(EvaluationError::NoReports)?;
    let shape = |r: &AccuracyReport| {
        (
            r.strategies.clone(),
            r.batches.iter().map(|b| b.batch_size).collect::<Vec<_>>(),
        )
    };
    if reports.iter().any(|r| shape(r) != shape(first)) {
        return Err(EvaluationError::ShapeMismatch);
    }
    let n = reports.len() as f64;
    let batches = first
        .batches
        .iter()
        .enumerate()
        .map(|(bi, b)| BatchAccuracy {
            batch_size: b.batch_size,
            wins: b
                .wins
                .iter()
                .enumerate()
                .map(|(si, w)| StrategyFraction {
                    strategy: w.strategy,
                    win_fraction: reports.iter().map(|r| r.batches[bi].wins[si].win_fraction).sum::<f64>() / n,
                })
                .collect(),
        })
        .collect();
    Ok(AccuracyReport {
        distribution: label.to_owned(),
        seed: first.seed,
        strategies: first.strategies.clone(),
        batches,
    })
}

/// One row per (report, batch, strategy), in report order.
pub fn write_report_csv<W: Write>(reports: &[AccuracyReport], out: W) -> Result<(), EvaluationError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        for b in &r.batches {
            for s in &b.wins {
                w.write_record([
                    r.distribution.clone(),
                    b.batch_size.to_string(),
                    s.strategy.name().to_owned(),
                    s.win_fraction.to_string(),
                    r.seed.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<AccuracyReport>, EvaluationError> {
    let mut rdr = csv::Reader::from_reader(input);
    if rdr.headers()?.iter().ne(REPORT_HEADER) {
        return Err(EvaluationError::BadReport("unexpected header".into()));
    }
    let mut reports: Vec<AccuracyReport> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| EvaluationError::BadReport(format!("row {}: bad {what}", i + 2));
        let distribution = rec[0].to_owned();
        let batch_size: usize = rec[1].parse().map_err(|_| bad("batch_size"))?;
        let strategy: Strategy = rec[2].parse().map_err(|_| bad("strategy"))?;
        let win_fraction: f64 = rec[3].parse().map_err(|_| bad("win_fraction"))?;
        let seed: u64 = rec[4].parse().map_err(|_| bad("seed"))?;

        if reports.last().is_none_or(|r| r.distribution != distribution) {
            reports.push(AccuracyReport {
                distribution,
                seed,
                strategies: Vec::new(),
                batches: Vec::new(),
            });
        }
        let report = reports.last_mut().expect("pushed above");
        if report.batches.last().is_none_or(|b| b.batch_size != batch_size) {
            report.batches.push(BatchAccuracy {
                batch_size,
                wins: Vec::new(),
            });
        }
        if report.batches.len() == 1 {
            report.strategies.push(strategy);
        }
        report
            .batches
            .last_mut()
            .expect("pushed above")
            .wins
            .push(StrategyFraction { strategy, win_fraction });
    }
    Ok(reports)
}
