use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use conflux_core::detection::detect_conflicts;
use conflux_core::evaluation::{
    aggregate_reports, fixture_from_case, run_experiment, write_report_csv, AccuracyReport, DistributionKind,
    ExperimentConfig, Fixture, FixtureOptions,
};
use conflux_core::prioritization::ScoringConfig;
use conflux_core::profiles::ContextEpisode;
use conflux_core::{scenarios, ConflictCase, ProfileMap, ResidentId, ServiceEvent, Strategy, StrategyConfig};
use serde::{Deserialize, Serialize};

use crate::diag::Failure;
use crate::io::{emit, read_events_file, read_json, read_profiles, read_templates, read_text, to_json};

pub const DEFAULT_BATCHES: [usize; 5] = [200, 400, 600, 800, 1000];

/// Contents of `experiment.toml`. Paths are relative to the file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub seed: Option<u64>,
    #[serde(default = "default_batches")]
    pub batch_sizes: Vec<usize>,
    #[serde(default = "all_kinds")]
    pub distributions: Vec<DistributionKind>,
    /// Adds an `all` report averaging the per-distribution ones.
    #[serde(default = "yes")]
    pub aggregate: bool,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "one")]
    pub normal_stddev: f64,
    #[serde(default = "yes")]
    pub raw_adaptive: bool,
    pub smoothing: Option<f64>,
    pub granularity: Option<f64>,
    pub static_order: Option<Vec<ResidentId>>,
    pub templates: Option<PathBuf>,
    /// Built-in household: `temperature` (default) or `illumination`.
    pub scenario: Option<String>,
    pub conflicts: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    /// Events CSV searched for earlier choices made during episodes.
    pub history: Option<PathBuf>,
    #[serde(default)]
    pub fixtures: Vec<Fixture>,
}

fn default_batches() -> Vec<usize> {
    DEFAULT_BATCHES.to_vec()
}

fn all_kinds() -> Vec<DistributionKind> {
    DistributionKind::ALL.to_vec()
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::Adaptive, Strategy::Average]
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize)]
struct Record<'a> {
    distribution: &'a str,
    batch_size: usize,
    strategy: Strategy,
    win_fraction: f64,
    seed: u64,
}

struct CaseSource {
    cases: Vec<ConflictCase>,
    profiles: ProfileMap,
    history: Vec<ServiceEvent>,
    episodes: Vec<ContextEpisode>,
}

impl ExperimentFile {
    fn load(path: &Path) -> Result<Self, Failure> {
        toml::from_str(&read_text(path)?).map_err(|e| Failure::config(path, e.message().to_owned()))
    }

    fn source(&self, base: &Path, config: &Path) -> Result<CaseSource, Failure> {
        if let Some(conflicts) = &self.conflicts {
            let profiles_path = self
                .profiles
                .as_ref()
                .ok_or_else(|| Failure::config(config, "`conflicts` needs `profiles`"))?;
            let profiles = read_profiles(&base.join(profiles_path))?;
            let history = match &self.history {
                Some(p) => read_events_file(&base.join(p))?.into_events(),
                None => Vec::new(),
            };
            return Ok(CaseSource {
                cases: read_json(&base.join(conflicts))?,
                profiles: profiles.profiles,
                history,
                episodes: profiles.episodes,
            });
        }
        let scenario = match self.scenario.as_deref().unwrap_or("temperature") {
            "temperature" => scenarios::temperature(),
            "illumination" => scenarios::illumination(),
            other => return Err(Failure::config(config, format!("unknown scenario `{other}`"))),
        };
        Ok(CaseSource {
            cases: detect_conflicts(&scenario.log, &scenario.profiles)?,
            profiles: scenario.profiles,
            history: scenario.history,
            episodes: scenario.episodes,
        })
    }

    fn fixture_options(&self, base: &Path) -> Result<FixtureOptions, Failure> {
        let mut opts = FixtureOptions {
            strategies: self.strategies.clone(),
            normal_stddev: self.normal_stddev,
            raw_adaptive: self.raw_adaptive,
            resolution: StrategyConfig {
                granularity: self.granularity.unwrap_or(1.0),
                static_order: self.static_order.clone(),
                ..StrategyConfig::default()
            },
            ..FixtureOptions::default()
        };
        if let Some(t) = &self.templates {
            opts.ranking.overrides = Some(read_templates(&base.join(t))?);
        }
        if let Some(s) = self.smoothing {
            opts.ranking.scoring = ScoringConfig {
                smoothing: s,
                ..ScoringConfig::default()
            };
        }
        Ok(opts)
    }

    /// Fixture lists per report label, in output order.
    fn fixture_sets(&self, config: &Path) -> Result<Vec<(String, Vec<Fixture>)>, Failure> {
        let base = config.parent().unwrap_or(Path::new("."));
        if !self.fixtures.is_empty() {
            if self.conflicts.is_some() || self.scenario.is_some() {
                return Err(Failure::config(
                    config,
                    "use one of `fixtures`, `conflicts` or `scenario`",
                ));
            }
            let mut by_kind: BTreeMap<DistributionKind, Vec<Fixture>> = BTreeMap::new();
            for f in &self.fixtures {
                by_kind.entry(f.truth.kind()).or_default().push(f.clone());
            }
            return Ok(by_kind.into_iter().map(|(k, fs)| (k.name().to_owned(), fs)).collect());
        }
        if self.conflicts.is_some() && self.scenario.is_some() {
            return Err(Failure::config(
                config,
                "use one of `fixtures`, `conflicts` or `scenario`",
            ));
        }
        let source = self.source(base, config)?;
        let opts = self.fixture_options(base)?;
        let mut sets = Vec::new();
        for &kind in &self.distributions {
            let fixtures = source
                .cases
                .iter()
                .map(|c| {
                    fixture_from_case(c, &source.profiles, &source.history, &source.episodes, kind, &opts)
                        .map(|(f, _)| f)
                        .map_err(|e| Failure::from(e).context(format!("case `{}`", c.id)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            sets.push((kind.name().to_owned(), fixtures));
        }
        Ok(sets)
    }
}

pub fn simulate(config: &Path, seed: Option<u64>, out: Option<&PathBuf>, json: bool) -> Result<(), Failure> {
    let file = ExperimentFile::load(config)?;
    let seed = seed.or(file.seed).ok_or_else(|| {
        Failure::new("cli::MissingSeed", "set `seed` in the config or pass --seed")
            .context(config.display().to_string())
    })?;

    let mut reports: Vec<AccuracyReport> = Vec::new();
    for (label, fixtures) in file.fixture_sets(config)? {
        let cfg = ExperimentConfig {
            label,
            seed,
            batch_sizes: file.batch_sizes.clone(),
            strategies: file.strategies.clone(),
            fixtures,
        };
        reports.push(run_experiment(&cfg)?);
    }
    if file.aggregate && reports.len() > 1 {
        let all = aggregate_reports(&reports, "all")?;
        reports.push(all);
    }

    let bytes = if json {
        let records: Vec<Record> = reports
            .iter()
            .flat_map(|r| {
                r.batches.iter().flat_map(move |b| {
                    b.wins.iter().map(move |w| Record {
                        distribution: &r.distribution,
                        batch_size: b.batch_size,
                        strategy: w.strategy,
                        win_fraction: w.win_fraction,
                        seed: r.seed,
                    })
                })
            })
            .collect();
        to_json(&records)
    } else {
        let mut buf = Vec::new();
        write_report_csv(&reports, &mut buf)?;
        buf
    };
    emit(out, &bytes)?;
    for r in &reports {
        if let Some(last) = r.batches.last() {
            let shares: Vec<String> = last
                .wins
                .iter()
                .map(|w| format!("{}={:.4}", w.strategy, w.win_fraction))
                .collect();
            eprintln!("{} (n={}): {}", r.distribution, last.batch_size, shares.join(" "));
        }
    }
    Ok(())
}
