//! Metrics tables computed from persisted records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::RunnerError;
use crate::search::{aggregate, read_record, RunRecord};

/// One results cell: best-value statistics over the complete trials of a row.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub target: String,
    pub mode: String,
    pub provider: String,
    /// Configured trials.
    pub trials: usize,
    pub completed: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation.
    pub std: Option<f64>,
    pub stderr: Option<f64>,
    /// Mean seconds per complete trial.
    pub wall_clock: Option<f64>,
}

impl MetricsRow {
    pub fn is_complete(&self) -> bool {
        self.completed >= self.trials
    }
}

/// `478.27 ± 0.00`
pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{mean:.2} ± {std:.2}")
}

fn row_key(r: &RunRecord) -> (String, String, String) {
    let c = &r.header.config;
    let provider = r
        .header
        .tag
        .as_ref()
        .map(|t| t.provider.clone())
        .unwrap_or_else(|| format!("{:?}", c.provider.kind).to_lowercase());
    (c.target.label(), c.mode.as_str().to_string(), provider)
}

/// Groups records by (target, mode, provider), sorted by that key.
pub fn metrics_rows(records: &[RunRecord]) -> Vec<MetricsRow> {
    let mut groups: BTreeMap<(String, String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(row_key(r)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((target, mode, provider), mut rs)| {
            // Fixed order so sums do not depend on how the records were gathered.
            rs.sort_by_key(|r| (r.header.tag.as_ref().map(|t| t.trial), r.header.config.seed));
            let complete: Vec<RunRecord> = rs.iter().filter(|r| r.is_complete()).map(|r| (*r).clone()).collect();
            let planned = rs
                .iter()
                .filter_map(|r| r.header.tag.as_ref().map(|t| t.trials))
                .max()
                .unwrap_or(rs.len());
            let agg = aggregate(&complete).ok();
            let wall = (!complete.is_empty())
                .then(|| complete.iter().map(|r| r.summary.wall_clock).sum::<f64>() / complete.len() as f64);
            MetricsRow {
                target,
                mode,
                provider,
                trials: planned,
                completed: complete.len(),
                mean: agg.map(|a| a.mean),
                std: agg.map(|a| a.std),
                stderr: agg.map(|a| a.stderr),
                wall_clock: wall,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub rows: Vec<MetricsRow>,
    /// Aligned text table.
    pub table: String,
    pub csv: String,
    /// Best-so-far curve of every record, long format.
    pub curves_csv: String,
}

fn find_records(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), RunnerError> {
    let entries = std::fs::read_dir(dir).map_err(|e| RunnerError::Io(format!("{}: {e}", dir.display())))?;
    for e in entries {
        let p = e.map_err(|e| RunnerError::Io(e.to_string()))?.path();
        if p.is_dir() {
            find_records(&p, out)?;
        } else {
            let name = p.file_name().unwrap_or_default().to_string_lossy();
            if name.ends_with(".jsonl") && !name.ends_with(".transcript.jsonl") {
                out.push(p);
            }
        }
    }
    Ok(())
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.decimals$}"))
}

/// Renders the table and CSV texts for `records`.
pub fn render_summary(records: &[RunRecord]) -> Summary {
    let rows = metrics_rows(records);
    let header = ["target", "mode", "provider", "trials", "best (mean ± std)", "stderr", "sec/trial"];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    let mut csv = String::from("target,mode,provider,trials,completed,mean,std,stderr,wall_clock,complete\n");
    for r in &rows {
        let flag = if r.is_complete() { "" } else { "*" };
        cells.push(vec![
            r.target.clone(),
            r.mode.clone(),
            r.provider.clone(),
            format!("{}/{}{flag}", r.completed, r.trials),
            match (r.mean, r.std) {
                (Some(m), Some(s)) => format_cell(m, s),
                _ => "n/a".into(),
            },
            opt(r.stderr, 2),
            opt(r.wall_clock, 1),
        ]);
        let num = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.target,
            r.mode,
            r.provider,
            r.trials,
            r.completed,
            num(r.mean),
            num(r.std),
            num(r.stderr),
            num(r.wall_clock),
            r.is_complete()
        );
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut table = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
            .collect();
        let _ = writeln!(table, "{}", line.join("  ").trim_end());
    }
    if rows.iter().any(|r| !r.is_complete()) {
        table.push_str("* fewer complete trials than configured\n");
    }
    let mut curves_csv = String::from("target,mode,provider,seed,index,iteration,f,best_f\n");
    for r in records {
        let (t, m, p) = row_key(r);
        for s in &r.steps {
            let _ = writeln!(
                curves_csv,
                "{t},{m},{p},{},{},{},{},{}",
                r.header.config.seed, s.index, s.iteration, s.f, s.best_f
            );
        }
    }
    Summary {
        rows,
        table,
        csv,
        curves_csv,
    }
}

/// Reads every record under `dir` and writes `summary.csv` and `curves.csv` there.
pub fn summarize(dir: &Path) -> Result<Summary, RunnerError> {
    let mut paths = Vec::new();
    find_records(dir, &mut paths)?;
    paths.sort();
    if paths.is_empty() {
        return Err(RunnerError::NoRecords(dir.to_path_buf()));
    }
    let records = paths.iter().map(|p| read_record(p)).collect::<Result<Vec<_>, _>>()?;
    let s = render_summary(&records);
    for (name, text) in [("summary.csv", &s.csv), ("curves.csv", &s.curves_csv)] {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| RunnerError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(s)
}
