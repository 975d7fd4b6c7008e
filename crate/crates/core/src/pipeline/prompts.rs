//! Versioned prompt registry, persisted as one JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, parse_err, PipelineError};
use crate::model::{sha256_hex, PromptRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredPrompt {
    #[serde(flatten)]
    pub record: PromptRecord,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRegistry {
    #[serde(default)]
    pub prompts: Vec<StoredPrompt>,
}

#[derive(Debug, Clone, Default)]
pub struct PromptMeta {
    pub language: String,
    pub notes: String,
}

impl PromptRegistry {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        match std::fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| parse_err(path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(io_err(path, e)),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("registry serializes");
        s.push('\n');
        s
    }

    pub fn get(&self, prompt_id: &str, version: u32) -> Option<&StoredPrompt> {
        self.prompts
            .iter()
            .find(|p| p.record.prompt_id == prompt_id && p.record.version == version)
    }

    /// Registers `text` under `prompt_id`. Text identical to an existing
    /// version returns that record; anything else gets the next version.
    pub fn register(
        &mut self,
        prompt_id: &str,
        text: &str,
        meta: PromptMeta,
    ) -> Result<(PromptRecord, bool), PipelineError> {
        if prompt_id.trim().is_empty() {
            return Err(PipelineError::InvalidPrompt("prompt id is empty".into()));
        }
        if text.trim().is_empty() {
            return Err(PipelineError::InvalidPrompt("prompt text is empty".into()));
        }
        let hash = sha256_hex(text.as_bytes());
        let same_id = || self.prompts.iter().filter(|p| p.record.prompt_id == prompt_id);
        if let Some(existing) = same_id().find(|p| p.record.content_hash == hash) {
            return Ok((existing.record.clone(), false));
        }
        let version = same_id().map(|p| p.record.version).max().unwrap_or(0) + 1;
        let record = PromptRecord {
            prompt_id: prompt_id.to_string(),
            version,
            content_hash: hash,
            language: meta.language,
            notes: meta.notes,
        };
        self.prompts.push(StoredPrompt {
            record: record.clone(),
            text: text.to_string(),
        });
        Ok((record, true))
    }
}

/// One-shot helper over an in-memory registry.
pub fn register_prompt(
    registry: &mut PromptRegistry,
    prompt_id: &str,
    text: &str,
    meta: PromptMeta,
) -> Result<PromptRecord, PipelineError> {
    registry.register(prompt_id, text, meta).map(|(r, _)| r)
}
