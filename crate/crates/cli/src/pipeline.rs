use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use conflux_core::detection::detect_conflicts;
use conflux_core::eventcsv::write_events;
use conflux_core::ingest::{merge_homes, parse_casas_log, DateWindow, HomeStream, SensorRegistry, SettleConfig};
use conflux_core::prioritization::{criteria_matrix_for, rank_residents, ScoringConfig, TemplateOverrides};
use conflux_core::resolution::{resolve, Rounding};
use conflux_core::{
    ConflictCase, ConflictType, ProfileMap, Ranking, RankingOptions, ResidentId, Strategy, StrategyConfig,
};

use crate::diag::Failure;
use crate::io::{emit, read_events_file, read_json, read_profiles, read_registry, read_templates, to_json};

pub struct IngestArgs {
    pub logs: Vec<(String, PathBuf)>,
    pub registry: PathBuf,
    pub profiles: PathBuf,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub settle_seconds: Option<i64>,
    pub out: Option<PathBuf>,
}

pub fn ingest(args: &IngestArgs) -> Result<(), Failure> {
    let registry = read_registry(&args.registry)?;
    let profiles = read_profiles(&args.profiles)?;
    let mut streams = Vec::with_capacity(args.logs.len());
    for (label, path) in &args.logs {
        let resident = profiles
            .homes
            .get(label)
            .ok_or_else(|| Failure::config(&args.profiles, format!("no resident is assigned to home `{label}`")))?;
        let file = fs::File::open(path).map_err(|e| Failure::io(path, e))?;
        let readings =
            parse_casas_log(BufReader::new(file)).map_err(|e| Failure::from(e).context(path.display().to_string()))?;
        streams.push(HomeStream::new(label.clone(), resident.clone(), readings));
    }
    let window = match (args.from, args.to) {
        (None, None) => None,
        (from, to) => Some(DateWindow {
            from: from.unwrap_or(NaiveDate::MIN),
            to: to.unwrap_or(NaiveDate::MAX),
        }),
    };
    let settle = SettleConfig {
        window_secs: args.settle_seconds.unwrap_or(SettleConfig::default().window_secs),
    };
    let merged = merge_homes(&streams, &registry, window, &settle)?;

    let mut buf = Vec::new();
    write_events(&mut buf, &merged.log)?;
    emit(args.out.as_ref(), &buf)?;
    for s in &merged.streams {
        eprintln!(
            "{} ({}): {} events, {} dangling, {} unmatched OFF, {} unmapped readings",
            s.home_label, s.resident_id, s.events_in_window, s.dangling, s.unmatched_off, s.unmapped
        );
    }
    eprintln!(
        "window {} to {}: {} events",
        merged.window.from,
        merged.window.to,
        merged.log.len()
    );
    Ok(())
}

pub fn detect(events: &Path, profiles: &Path, out: Option<&PathBuf>) -> Result<(), Failure> {
    let log = read_events_file(events)?;
    let profiles = read_profiles(profiles)?;
    let cases = detect_conflicts(&log, &profiles.profiles)?;
    emit(out, &to_json(&cases))?;
    eprintln!("{} conflicts in {} events", cases.len(), log.len());
    Ok(())
}

pub struct RankArgs {
    pub conflicts: PathBuf,
    pub profiles: PathBuf,
    pub templates: Option<PathBuf>,
    pub smoothing: Option<f64>,
}

impl RankArgs {
    fn options(&self) -> Result<RankingOptions, Failure> {
        let mut opts = RankingOptions::default();
        if let Some(path) = &self.templates {
            let overrides = read_templates(path)?;
            check_templates(&overrides, &opts)?;
            opts.overrides = Some(overrides);
        }
        if let Some(s) = self.smoothing {
            opts.scoring = ScoringConfig {
                smoothing: s,
                ..ScoringConfig::default()
            };
        }
        Ok(opts)
    }

    fn inputs(&self) -> Result<(Vec<ConflictCase>, ProfileMap), Failure> {
        let cases: Vec<ConflictCase> = read_json(&self.conflicts)?;
        for c in &cases {
            c.validate()
                .map_err(|e| Failure::from(e).context(format!("case `{}`", c.id)))?;
        }
        Ok((cases, read_profiles(&self.profiles)?.profiles))
    }
}

/// Every template is checked up front, so a bad matrix fails the run even
/// when no conflict of its type is present.
fn check_templates(overrides: &TemplateOverrides, opts: &RankingOptions) -> Result<(), Failure> {
    for key in overrides.0.keys() {
        let conflict_type = match key.as_str() {
            "temperature" => ConflictType::Temperature,
            "illumination" => ConflictType::Illumination,
            "audio" => ConflictType::Audio,
            "other" => ConflictType::Other("other".into()),
            _ => {
                return Err(Failure::new(
                    "cli::Config",
                    format!("unknown template key `{key}`; expected temperature, illumination, audio or other"),
                ))
            }
        };
        criteria_matrix_for(&conflict_type, Some(overrides), &opts.random_index)?;
    }
    Ok(())
}

fn rank_all(cases: &[ConflictCase], profiles: &ProfileMap, opts: &RankingOptions) -> Result<Vec<Ranking>, Failure> {
    cases
        .iter()
        .map(|c| rank_residents(c, profiles, opts).map_err(|e| Failure::from(e).context(format!("case `{}`", c.id))))
        .collect()
}

pub fn rank(args: &RankArgs, out: Option<&PathBuf>) -> Result<(), Failure> {
    let opts = args.options()?;
    let (cases, profiles) = args.inputs()?;
    let rankings = rank_all(&cases, &profiles, &opts)?;
    emit(out, &to_json(&rankings))
}

pub struct ResolveArgs {
    pub rank: RankArgs,
    pub strategy: Strategy,
    pub order: Option<Vec<ResidentId>>,
    pub registry: Option<PathBuf>,
    pub rounding: Rounding,
    pub granularity: Option<f64>,
}

pub fn resolve_cases(args: &ResolveArgs, out: Option<&PathBuf>) -> Result<(), Failure> {
    let opts = args.rank.options()?;
    let registry = match &args.registry {
        Some(path) => read_registry(path)?,
        None => SensorRegistry::default(),
    };
    let (cases, profiles) = args.rank.inputs()?;
    let rankings = if args.strategy == Strategy::Adaptive {
        rank_all(&cases, &profiles, &opts)?.into_iter().map(Some).collect()
    } else {
        vec![None; cases.len()]
    };
    let mut decisions = Vec::with_capacity(cases.len());
    for (case, ranking) in cases.iter().zip(&rankings) {
        let cfg = StrategyConfig {
            rounding: args.rounding,
            granularity: args
                .granularity
                .unwrap_or_else(|| registry.granularity(&case.attribute)),
            static_order: args.order.clone(),
        };
        let d = resolve(case, args.strategy, ranking.as_ref(), &cfg)
            .map_err(|e| Failure::from(e).context(format!("case `{}`", case.id)))?;
        decisions.push(d);
    }
    emit(out, &to_json(&decisions))
}
