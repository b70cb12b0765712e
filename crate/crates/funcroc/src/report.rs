//! Text, JSON and CSV renderings of study results.

use std::io::{self, Write};

use funcroc_core::roc::RocSummary;
use indexmap::IndexMap;

use crate::harness::{IndexKind, ReplicationResult, StudyReport};

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

/// Fixed-width table of the per-index summaries. Timing is left out so the
/// output is deterministic for a given configuration.
pub fn render_text(report: &StudyReport) -> String {
    let c = &report.config;
    let mut out = String::new();
    match (&c.scenario, &c.input) {
        (Some(s), _) => {
            out.push_str(&format!("scenario {s}"));
            if let Some(rho) = c.rho {
                out.push_str(&format!(" rho={rho}"));
            }
            if let Some(p) = &c.process {
                out.push_str(&format!(" process={p}"));
            }
            if let (Some(nd), Some(nh)) = (c.n_d, c.n_h) {
                out.push_str(&format!(" nD={nd} nH={nh}"));
            }
            if let Some(m) = c.grid_size {
                out.push_str(&format!(" m={m}"));
            }
        }
        (None, Some(path)) => out.push_str(&format!("input {path}")),
        (None, None) => out.push_str("input <memory>"),
    }
    out.push('\n');
    out.push_str(&format!("reps={} var_fraction={}", c.reps, c.var_fraction));
    if let Some(seed) = report.seed {
        out.push_str(&format!(" seed={seed}"));
    }
    out.push('\n');
    out.push_str(&format!(
        "{:<10} {:>8} {:>8} {:>8} {:>6} {:>6}\n",
        "index", "auc", "sd", "youden", "ok", "fail"
    ));
    for (k, s) in &report.per_index {
        out.push_str(&format!(
            "{:<10} {:>8} {:>8} {:>8} {:>6} {:>6}\n",
            k.as_str(),
            cell(s.mean_auc),
            cell(s.sd_auc),
            cell(s.mean_youden),
            s.successes,
            s.failures
        ));
    }
    out
}

pub fn to_json(report: &StudyReport) -> serde_json::Result<String> {
    serde_json::to_string_pretty(report)
}

pub fn from_json(text: &str) -> serde_json::Result<StudyReport> {
    serde_json::from_str(text)
}

/// Long-format `index,p,roc` rows for the curves of a single analysis.
pub fn write_roc_csv(
    out: impl Write,
    curves: &IndexMap<IndexKind, Result<RocSummary, String>>,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "p", "roc"])?;
    for (k, c) in curves {
        let Ok(c) = c else { continue };
        for (p, r) in c.p_grid.iter().zip(&c.roc_values) {
            w.write_record([k.as_str(), &p.to_string(), &r.to_string()])?;
        }
    }
    w.flush()
}

/// `replication,index,p,roc` rows for every stored curve of a study.
pub fn write_replication_roc_csv(out: impl Write, p_grid: &[f64], results: &[ReplicationResult]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replication", "index", "p", "roc"])?;
    for r in results {
        let id = r.replication_id.to_string();
        for (k, m) in &r.per_index {
            let Some(values) = m.as_ref().ok().and_then(|m| m.roc_values.as_ref()) else {
                continue;
            };
            for (p, v) in p_grid.iter().zip(values) {
                w.write_record([id.as_str(), k.as_str(), &p.to_string(), &v.to_string()])?;
            }
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_study, RunConfig};
    use funcroc_core::simulation::{ScenarioName, ScenarioSpec};

    fn study() -> StudyReport {
        let spec = ScenarioSpec::new(ScenarioName::D21, 5).with_sizes(25, 25).with_grid_size(20);
        let mut cfg = RunConfig::scenario(spec);
        cfg.reps = 3;
        run_study(&cfg).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let r = study();
        let back = from_json(&to_json(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn empty_index_set_renders_header_only() {
        let spec = ScenarioSpec::new(ScenarioName::D21, 5).with_sizes(10, 10).with_grid_size(10);
        let mut cfg = RunConfig::scenario(spec);
        cfg.indexes.clear();
        let r = run_study(&cfg).unwrap();
        let text = render_text(&r);
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().last().unwrap().starts_with("index"));
        assert!(!r.all_failed());
    }

    #[test]
    fn missing_values_print_as_na() {
        let mut r = study();
        let s = r.per_index.get_mut(&IndexKind::Quad).unwrap();
        s.sd_auc = None;
        assert!(render_text(&r).lines().any(|l| l.starts_with("quad") && l.contains("NA")));
    }
}
