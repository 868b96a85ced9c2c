//! Replays recorded responses in file order.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{Completion, Exchange, LlmError, Provider};

/// Reads a JSON-lines file of [`Exchange`] records; blank lines are skipped.
pub fn load_exchanges(path: &Path) -> Result<Vec<Exchange>, LlmError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| LlmError::Io(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Each call returns the next recorded response verbatim; the prompt is ignored.
#[derive(Debug)]
pub struct ReplayProvider {
    responses: Vec<String>,
    cursor: AtomicUsize,
}

impl ReplayProvider {
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::from_exchanges(load_exchanges(path)?))
    }

    pub fn from_exchanges(exchanges: Vec<Exchange>) -> Self {
        Self {
            responses: exchanges.into_iter().map(|e| e.response).collect(),
            cursor: AtomicUsize::new(0),
        }
    }

    pub fn remaining(&self) -> usize {
        self.responses.len().saturating_sub(self.cursor.load(Ordering::SeqCst))
    }
}

impl Provider for ReplayProvider {
    fn call(&self, _prompt: &str) -> Result<Completion, LlmError> {
        let i = self.cursor.fetch_add(1, Ordering::SeqCst);
        match self.responses.get(i) {
            Some(text) => Ok(Completion { text: text.clone(), attempt: 1 }),
            None => {
                self.cursor.fetch_sub(1, Ordering::SeqCst);
                Err(LlmError::ReplayExhausted(self.responses.len()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{build_provider, complete, ProviderConfig, Transcript};

    #[test]
    fn three_recordings_then_exhausted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let rec: String = ["a", "b\nsecond line", "  c  "]
            .iter()
            .map(|r| {
                serde_json::to_string(&Exchange {
                    prompt: "p".into(),
                    response: r.to_string(),
                    latency: 0.5,
                    attempt: 1,
                })
                .unwrap()
                    + "\n"
            })
            .collect();
        std::fs::write(&path, rec + "\n").unwrap();
        let p = build_provider(&ProviderConfig::replay(&path)).unwrap();
        let t = Transcript::new();
        assert_eq!(complete(p.as_ref(), "x", &t).unwrap(), "a");
        assert_eq!(complete(p.as_ref(), "y", &t).unwrap(), "b\nsecond line");
        assert_eq!(complete(p.as_ref(), "z", &t).unwrap(), "  c  ");
        assert_eq!(complete(p.as_ref(), "w", &t), Err(LlmError::ReplayExhausted(3)));
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn corrupt_file_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(&path, "{\"prompt\":\"p\",\"response\":\"a\",\"latency\":0,\"attempt\":1}\nnot json\n").unwrap();
        match ReplayProvider::open(&path) {
            Err(LlmError::Io(m)) => assert!(m.contains(":2:"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ReplayProvider::open(&dir.path().join("missing")), Err(LlmError::Io(_))));
    }
}
