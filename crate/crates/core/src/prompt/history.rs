//! In-context history: `(params, f, iteration)` entries in a bounded deque, printed one
//! line per entry, oldest first.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::policies::ParamVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub params: ParamVector,
    pub f: f64,
    pub iteration: usize,
}

/// Insertion-ordered history; beyond `maxlen` the oldest entry is evicted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HistoryBuffer {
    entries: VecDeque<HistoryEntry>,
    maxlen: Option<usize>,
}

impl HistoryBuffer {
    pub fn unbounded() -> Self {
        Self::default()
    }

    /// `maxlen = None` is unbounded. A zero bound is treated as 1.
    pub fn new(maxlen: Option<usize>) -> Self {
        Self {
            entries: VecDeque::new(),
            maxlen: maxlen.map(|m| m.max(1)),
        }
    }

    pub fn maxlen(&self) -> Option<usize> {
        self.maxlen
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.iter()
    }

    pub fn rank(&self) -> Option<usize> {
        self.entries.front().map(|e| e.params.rank())
    }

    pub fn push(&mut self, entry: HistoryEntry) -> Result<(), PromptError> {
        if let Some(expected) = self.rank() {
            if entry.params.rank() != expected {
                return Err(PromptError::RankMismatch {
                    expected,
                    got: entry.params.rank(),
                });
            }
        }
        if !entry.f.is_finite() || !entry.params.is_finite() {
            return Err(PromptError::NonFiniteValue);
        }
        self.entries.push_back(entry);
        if let Some(m) = self.maxlen {
            while self.entries.len() > m {
                self.entries.pop_front();
            }
        }
        Ok(())
    }
}

/// Fixed-point with `decimals` places, without a sign on zero.
pub(crate) fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

/// `params[0]: -2.1; params[1]: -1.6`, the response grammar's params line.
pub fn format_params_line(params: &[f64], decimals: usize) -> String {
    params
        .iter()
        .enumerate()
        .map(|(i, v)| format!("params[{i}]: {}", fixed(*v, decimals)))
        .collect::<Vec<_>>()
        .join("; ")
}

/// `params[0]: -2.1; params[1]: -1.6; f(params): -116.18`
pub fn format_history_line(params: &[f64], f: f64, decimals: usize) -> String {
    format!("{}; f(params): {}", format_params_line(params, decimals), fixed(f, 2))
}

pub fn format_history(history: &HistoryBuffer, decimals: usize) -> String {
    history
        .iter()
        .map(|e| format_history_line(&e.params.0, e.f, decimals))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Inverse of [`format_history_line`]: `(params, f)`.
pub fn parse_history_line(line: &str) -> Result<(Vec<f64>, f64), PromptError> {
    let mut params = Vec::new();
    let mut f = None;
    for field in line.trim().split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = field
            .split_once(':')
            .ok_or_else(|| PromptError::UnparseablePrompt(format!("history field `{field}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| PromptError::NonNumericValue(value.trim().to_string()))?;
        let key = key.trim();
        if key == "f(params)" {
            f = Some(value);
        } else {
            let idx = key
                .strip_prefix("params[")
                .and_then(|k| k.strip_suffix(']'))
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| PromptError::UnparseablePrompt(format!("history key `{key}`")))?;
            if idx != params.len() {
                return Err(PromptError::UnparseablePrompt(format!("history index {idx} out of order")));
            }
            params.push(value);
        }
    }
    let f = f.ok_or_else(|| PromptError::UnparseablePrompt("history line without f(params)".into()))?;
    Ok((params, f))
}
