//! JSON-lines persistence of run records.
//!
//! `<stem>.jsonl` holds a header line, one line per evaluation and a closing summary
//! line; `<stem>.summary.json` repeats the header and summary without the steps and is
//! written last, so its presence marks a finished file.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{RunRecord, RunStatus, SearchConfig, SearchError, StepRecord, Target};
use crate::numopt::{Function, ObjectiveSpec};
use crate::policies::ParamVector;

/// Placement of a run inside an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialTag {
    pub experiment: String,
    pub provider: String,
    pub trial: usize,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub config: SearchConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<TrialTag>,
}

impl RunHeader {
    /// The shifted objective of a minimization run.
    pub fn objective(&self) -> Option<ObjectiveSpec> {
        match (&self.config.target, &self.objective_shift) {
            (Target::Objective { function, .. }, Some(shift)) => {
                Some(ObjectiveSpec::new(Function::by_name(function).ok()?, shift.clone()))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub best_params: Option<ParamVector>,
    pub best_f: Option<f64>,
    /// Loop iterations that produced an evaluation (warmup included, seed examples not).
    pub iterations_completed: usize,
    /// Environment episodes consumed.
    pub episodes: usize,
    pub status: RunStatus,
    /// Seconds.
    pub wall_clock: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Line {
    Header(RunHeader),
    Step(StepRecord),
    Summary(RunSummary),
}

#[derive(Serialize, Deserialize)]
struct SummaryFile {
    header: RunHeader,
    summary: RunSummary,
}

/// `<target>-<mode>-<seed>`.
pub fn record_stem(config: &SearchConfig) -> String {
    format!("{}-{}-{}", config.target.label(), config.mode.as_str(), config.seed)
}

/// The summary file next to a record file.
pub fn summary_path(record_path: &Path) -> PathBuf {
    let stem = record_path.file_stem().unwrap_or_default().to_string_lossy();
    record_path.with_file_name(format!("{stem}.summary.json"))
}

fn io(path: &Path, e: impl std::fmt::Display) -> SearchError {
    SearchError::Io(format!("{}: {e}", path.display()))
}

/// Writes `record` to `path` (the `.jsonl` file) and its summary file.
pub fn write_record(record: &RunRecord, path: &Path) -> Result<(), SearchError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut line = |l: &Line| -> Result<(), SearchError> {
        serde_json::to_writer(&mut w, l).map_err(|e| io(path, e))?;
        w.write_all(b"\n").map_err(|e| io(path, e))
    };
    line(&Line::Header(record.header.clone()))?;
    for s in &record.steps {
        line(&Line::Step(s.clone()))?;
    }
    line(&Line::Summary(record.summary.clone()))?;
    w.flush().map_err(|e| io(path, e))?;
    let sp = summary_path(path);
    let summary = SummaryFile {
        header: record.header.clone(),
        summary: record.summary.clone(),
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| io(&sp, e))?;
    std::fs::write(&sp, text + "\n").map_err(|e| io(&sp, e))
}

/// Reads a record written by [`write_record`].
pub fn read_record(path: &Path) -> Result<RunRecord, SearchError> {
    let file = std::fs::File::open(path).map_err(|e| io(path, e))?;
    let corrupt = |n: usize, m: String| SearchError::RecordCorrupt(format!("{}:{n}: {m}", path.display()));
    let mut header = None;
    let mut steps = Vec::new();
    let mut summary = None;
    for (i, l) in BufReader::new(file).lines().enumerate() {
        let l = l.map_err(|e| io(path, e))?;
        if l.trim().is_empty() {
            continue;
        }
        if summary.is_some() {
            return Err(corrupt(i + 1, "content after the summary line".into()));
        }
        match serde_json::from_str::<Line>(&l).map_err(|e| corrupt(i + 1, e.to_string()))? {
            Line::Header(h) if header.is_none() && i == 0 => header = Some(h),
            Line::Header(_) => return Err(corrupt(i + 1, "unexpected header line".into())),
            Line::Step(s) => {
                if header.is_none() {
                    return Err(corrupt(i + 1, "step before header".into()));
                }
                if s.index != steps.len() {
                    return Err(corrupt(i + 1, format!("step index {} out of sequence", s.index)));
                }
                steps.push(s);
            }
            Line::Summary(s) => summary = Some(s),
        }
    }
    let header = header.ok_or_else(|| corrupt(1, "missing header".into()))?;
    let summary = summary.ok_or_else(|| corrupt(steps.len() + 2, "missing summary (unfinished file?)".into()))?;
    Ok(RunRecord { header, steps, summary })
}

/// Reads only the summary file of a record; `None` if it does not exist.
pub(crate) fn read_summary(record_path: &Path) -> Result<Option<(RunHeader, RunSummary)>, SearchError> {
    let sp = summary_path(record_path);
    if !sp.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&sp).map_err(|e| io(&sp, e))?;
    let s: SummaryFile =
        serde_json::from_str(&text).map_err(|e| SearchError::RecordCorrupt(format!("{}: {e}", sp.display())))?;
    Ok(Some((s.header, s.summary)))
}
