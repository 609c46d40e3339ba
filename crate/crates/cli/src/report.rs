use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use conflux_core::domain::ResolutionDecision;
use conflux_core::evaluation::{read_report_csv, AccuracyReport};

use crate::diag::Failure;
use crate::io::{emit, read_text};

/// Prints a win-fraction table for a simulation report, or a per-case table
/// for a decisions file. JSON input is recognised by its leading `[`.
pub fn report(input: &Path, out: Option<&PathBuf>) -> Result<(), Failure> {
    let text = read_text(input)?;
    let summary = if text.trim_start().starts_with('[') {
        let decisions: Vec<ResolutionDecision> =
            serde_json::from_str(&text).map_err(|e| Failure::config(input, e.to_string()))?;
        decisions_table(&decisions)
    } else {
        accuracy_table(&read_report_csv(text.as_bytes())?)
    };
    emit(out, summary.as_bytes())
}

fn accuracy_table(reports: &[AccuracyReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(s, "{} (seed {})", r.distribution, r.seed);
        let _ = write!(s, "{:>8}", "batch");
        for st in &r.strategies {
            let _ = write!(s, "{:>12}", st.name());
        }
        s.push('\n');
        for b in &r.batches {
            let _ = write!(s, "{:>8}", b.batch_size);
            for w in &b.wins {
                let _ = write!(s, "{:>12.4}", w.win_fraction);
            }
            s.push('\n');
        }
        if !r.batches.is_empty() {
            let _ = write!(s, "{:>8}", "mean");
            for k in 0..r.strategies.len() {
                let mean = r.batches.iter().map(|b| b.wins[k].win_fraction).sum::<f64>() / r.batches.len() as f64;
                let _ = write!(s, "{mean:>12.4}");
            }
            s.push('\n');
        }
        s.push('\n');
    }
    s
}

fn decisions_table(decisions: &[ResolutionDecision]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:<14} {:<10} {:>10} {:>10}  top",
        "case", "attribute", "strategy", "setpoint", "raw"
    );
    let mut per_strategy: BTreeMap<String, usize> = BTreeMap::new();
    for d in decisions {
        let raw = d.raw.map_or_else(|| "-".to_owned(), |r| format!("{r:.4}"));
        let top = d.ranking.first().map_or_else(
            || "-".to_owned(),
            |w| format!("{} ({:.4})", w.resident_id, w.normalized_weight),
        );
        let _ = writeln!(
            s,
            "{:<8} {:<14} {:<10} {:>10} {:>10}  {}",
            d.case_id,
            d.attribute,
            d.strategy.name(),
            d.setpoint.to_string(),
            raw,
            top
        );
        *per_strategy.entry(d.strategy.name().to_owned()).or_default() += 1;
    }
    let _ = writeln!(s);
    for (strategy, n) in per_strategy {
        let _ = writeln!(s, "{strategy}: {n} decisions");
    }
    s
}
