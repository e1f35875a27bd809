use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{mock_generate, GenerationConfig, GenerationRequest};
use crate::scene::reply_doc;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out after {0} s")]
    Timeout(u64),
    #[error("transcript exhausted after {0} replies")]
    Exhausted(usize),
    #[error("backend unavailable: {0}")]
    Unavailable(String),
}

/// A text-completion service: one prompt in, one reply out.
pub trait CompletionBackend {
    fn complete(&mut self, prompt: &str) -> Result<String, BackendError>;
}

impl<F> CompletionBackend for F
where
    F: FnMut(&str) -> Result<String, BackendError>,
{
    fn complete(&mut self, prompt: &str) -> Result<String, BackendError> {
        self(prompt)
    }
}

/// Offline stand-in that answers with the mock scenario for one request,
/// wrapped in a little prose and a code fence.
#[derive(Debug, Clone)]
pub struct MockBackend {
    reply: Result<String, String>,
}

impl MockBackend {
    pub fn new(req: &GenerationRequest, cfg: &GenerationConfig) -> Self {
        let reply = mock_generate(req, cfg)
            .map(|s| {
                let json = serde_json::to_string_pretty(&reply_doc(&s)).expect("reply serializes");
                format!("Here is the task-oriented scene graph.\n\n```json\n{json}\n```\n")
            })
            .map_err(|e| e.to_string());
        Self { reply }
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&mut self, _prompt: &str) -> Result<String, BackendError> {
        self.reply.clone().map_err(BackendError::Unavailable)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub prompt: String,
    pub reply: String,
}

/// Replays recorded replies in order, ignoring the prompt.
#[derive(Debug, Clone)]
pub struct TranscriptBackend {
    records: Vec<TranscriptRecord>,
    next: usize,
}

impl TranscriptBackend {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        Self { records, next: 0 }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        load_transcript(path).map(Self::new)
    }
}

impl CompletionBackend for TranscriptBackend {
    fn complete(&mut self, _prompt: &str) -> Result<String, BackendError> {
        let record = self.records.get(self.next).ok_or(BackendError::Exhausted(self.next))?;
        self.next += 1;
        Ok(record.reply.clone())
    }
}

/// Wraps a backend and keeps every prompt/reply pair it sees.
#[derive(Debug, Clone)]
pub struct RecordingBackend<B> {
    inner: B,
    records: Vec<TranscriptRecord>,
}

impl<B: CompletionBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TranscriptRecord> {
        self.records
    }
}

impl<B: CompletionBackend> CompletionBackend for RecordingBackend<B> {
    fn complete(&mut self, prompt: &str) -> Result<String, BackendError> {
        let reply = self.inner.complete(prompt)?;
        self.records.push(TranscriptRecord {
            prompt: prompt.to_string(),
            reply: reply.clone(),
        });
        Ok(reply)
    }
}

/// Transcript files are JSON Lines, one record per call.
pub fn load_transcript(path: impl AsRef<Path>) -> Result<Vec<TranscriptRecord>, BackendError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| BackendError::Unavailable(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| BackendError::Unavailable(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn write_transcript(mut w: impl Write, records: &[TranscriptRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
