//! Reading model output (and, for scripted stand-ins, the prompt itself).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::history::parse_history_line;
use super::{PromptContext, PromptError};
use crate::policies::ParamVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub params: ParamVector,
    pub explanation: String,
}

impl ParsedResponse {
    /// True if any value lies outside the advertised range.
    pub fn out_of_range(&self, ctx: &PromptContext) -> bool {
        let (lo, hi) = ctx.value_range;
        self.params.0.iter().any(|v| *v < lo || *v > hi)
    }
}

fn assignment() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)params\s*\[\s*(\d+)\s*\]\s*[:=]\s*([^;,\s]*)").unwrap())
}

fn clean_value(raw: &str) -> &str {
    raw.trim_start_matches(['(', '\'', '"'])
        .trim_end_matches(['.', ')', '\'', '"'])
}

/// Extracts `params[i]: value` assignments from the first run of lines that carry them;
/// the text after that run is the explanation.
pub fn parse_response(text: &str, ctx: &PromptContext) -> Result<ParsedResponse, PromptError> {
    let stripped: String = text.chars().filter(|c| *c != '*' && *c != '`').collect();
    let lines: Vec<&str> = stripped.lines().collect();
    let has_assignment = |l: &str| assignment().is_match(l);
    let start = lines
        .iter()
        .position(|l| has_assignment(l))
        .ok_or(PromptError::MissingIndex(0))?;
    let end = lines[start..]
        .iter()
        .position(|l| !has_assignment(l))
        .map_or(lines.len(), |n| start + n);

    let mut values: BTreeMap<usize, f64> = BTreeMap::new();
    for line in &lines[start..end] {
        for cap in assignment().captures_iter(line) {
            let idx: usize = cap[1]
                .parse()
                .map_err(|_| PromptError::NonNumericValue(cap[1].to_string()))?;
            let token = clean_value(&cap[2]);
            let v: f64 = token
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| PromptError::NonNumericValue(token.to_string()))?;
            if idx >= ctx.rank {
                return Err(PromptError::UnexpectedIndex(idx));
            }
            match values.insert(idx, v) {
                Some(prev) if prev != v => return Err(PromptError::DuplicateIndex(idx)),
                _ => {}
            }
        }
    }
    let mut params = Vec::with_capacity(ctx.rank);
    for i in 0..ctx.rank {
        let v = *values.get(&i).ok_or(PromptError::MissingIndex(i))?;
        if ctx.mode.is_tabular() {
            let legal = v.fract() == 0.0 && v >= 0.0 && ctx.action_set.contains(&(v as usize));
            if !legal {
                return Err(PromptError::IllegalTabularAction { index: i, value: v });
            }
        }
        params.push(v);
    }

    let rest = lines[end..].join("\n");
    let rest = rest.trim();
    let explanation = strip_label(rest).to_string();
    Ok(ParsedResponse {
        params: ParamVector(params),
        explanation,
    })
}

fn strip_label(s: &str) -> &str {
    let lower = s.get(..7).map(str::to_ascii_lowercase);
    if lower.as_deref() == Some("line 2:") {
        s[7..].trim_start()
    } else {
        s
    }
}

/// What a rendered prompt advertises, recovered from its text alone.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptFacts {
    pub rank: usize,
    pub value_range: (f64, f64),
    pub decimals: usize,
    pub step_size: f64,
    /// Legal values for tabular prompts.
    pub actions: Option<Vec<usize>>,
    pub minimize: bool,
    pub iteration: usize,
    pub max_steps: usize,
    /// `(params, f)` in prompt order.
    pub history: Vec<(Vec<f64>, f64)>,
}

fn facts_regexes() -> &'static [Regex; 5] {
    static RE: OnceLock<[Regex; 5]> = OnceLock::new();
    RE.get_or_init(|| {
        [
            Regex::new(r"is an array of (\d+) (?:float|int) numbers").unwrap(),
            Regex::new(r"in the range of \[\s*([^,\]]+?)\s*,\s*([^\]]+?)\s*\] with (\d+) decimal").unwrap(),
            Regex::new(r"chosen from \[([^\]]*)\]").unwrap(),
            Regex::new(r"search step size of ([0-9][0-9.eE+-]*[0-9])").unwrap(),
            Regex::new(r"iteration (\d+) out of (\d+)").unwrap(),
        ]
    })
}

impl PromptFacts {
    pub fn extract(prompt: &str) -> Result<Self, PromptError> {
        let [rank_re, range_re, actions_re, step_re, iter_re] = facts_regexes();
        let missing = |what: &str| PromptError::UnparseablePrompt(format!("no {what} found"));
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| PromptError::UnparseablePrompt(format!("bad number `{s}`")))
        };
        let rank: usize = rank_re
            .captures(prompt)
            .and_then(|c| c[1].parse().ok())
            .ok_or_else(|| missing("rank"))?;
        let actions = match actions_re.captures(prompt) {
            Some(c) => Some(
                c[1].split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| PromptError::UnparseablePrompt("bad action list".into()))?,
            ),
            None => None,
        };
        let (value_range, decimals) = match (range_re.captures(prompt), &actions) {
            (Some(c), _) => ((num(&c[1])?, num(&c[2])?), c[3].parse().unwrap_or(1)),
            (None, Some(a)) if !a.is_empty() => {
                let lo = *a.iter().min().unwrap() as f64;
                let hi = *a.iter().max().unwrap() as f64;
                ((lo, hi), 0)
            }
            _ => return Err(missing("value range")),
        };
        let step_size = match step_re.captures(prompt) {
            Some(c) => num(&c[1])?,
            None => 1.0,
        };
        let (iteration, max_steps) = iter_re
            .captures(prompt)
            .map(|c| (c[1].parse().unwrap_or(1), c[2].parse().unwrap_or(1)))
            .ok_or_else(|| missing("iteration line"))?;
        let history = prompt
            .lines()
            .map(str::trim)
            .filter(|l| l.starts_with("params[0]:") && l.contains("f(params):"))
            .map(parse_history_line)
            .collect::<Result<Vec<_>, _>>()?;
        if let Some((bad, _)) = history.iter().find(|(p, _)| p.len() != rank) {
            return Err(PromptError::RankMismatch { expected: rank, got: bad.len() });
        }
        Ok(Self {
            rank,
            value_range,
            decimals,
            step_size,
            actions,
            minimize: prompt.contains("global minimum"),
            iteration,
            max_steps,
            history,
        })
    }

    /// Best history entry under the prompt's orientation.
    pub fn best(&self) -> Option<&(Vec<f64>, f64)> {
        let better = |a: f64, b: f64| if self.minimize { a < b } else { a > b };
        self.history.iter().fold(None, |acc, e| match acc {
            Some(b) if !better(e.1, b.1) => Some(b),
            _ => Some(e),
        })
    }
}
