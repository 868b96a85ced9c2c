//! The text protocol between the search loop and the model: prompt contexts, template
//! rendering, the in-context history block and response parsing.
//!
//! Templates are plain UTF-8 assets with `{{ name }}` placeholders, one per mode. The
//! built-in set is compiled in; [`Templates::load_dir`] swaps in variants from disk.

use thiserror::Error;

mod context;
mod history;
mod parse;
mod template;

pub use context::{default_optimum, env_description, env_hints, PromptContext, PromptMode};
pub use history::{format_history, format_history_line, format_params_line, parse_history_line, HistoryBuffer, HistoryEntry};
pub use parse::{parse_response, ParsedResponse, PromptFacts};
pub use template::{render, render_template, Templates};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromptError {
    #[error("template variable `{0}` has no value")]
    TemplateVarMissing(String),
    #[error("invalid prompt context: {0}")]
    InvalidContext(String),
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("history entry value is not finite")]
    NonFiniteValue,
    #[error("response is missing params[{0}]")]
    MissingIndex(usize),
    #[error("response assigns params[{0}] twice with different values")]
    DuplicateIndex(usize),
    #[error("response assigns params[{0}] outside the expected rank")]
    UnexpectedIndex(usize),
    #[error("non-numeric parameter value `{0}`")]
    NonNumericValue(String),
    #[error("params[{index}] = {value} is not a legal action")]
    IllegalTabularAction { index: usize, value: f64 },
    #[error("cannot read the prompt: {0}")]
    UnparseablePrompt(String),
    #[error("template io: {0}")]
    Io(String),
}

impl PromptError {
    /// Protocol violations by the model that a re-prompt may fix.
    pub fn is_retriable(&self) -> bool {
        matches!(
            self,
            PromptError::MissingIndex(_)
                | PromptError::DuplicateIndex(_)
                | PromptError::UnexpectedIndex(_)
                | PromptError::NonNumericValue(_)
                | PromptError::IllegalTabularAction { .. }
        )
    }
}
