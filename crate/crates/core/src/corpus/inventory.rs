use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Corpus;

/// Reserved role meaning "not an argument of this predicate".
pub const NULL_ROLE: &str = "NULL";

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot build a label inventory from an empty corpus")]
    EmptyCorpus,
}

/// Sense and role label spaces of one language.
///
/// `roles[0]` is always [`NULL_ROLE`]; the remaining labels appear in the
/// order they are first met walking sentences, then frames, then arguments
/// by token index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelInventory {
    pub language: String,
    pub senses: Vec<String>,
    pub roles: Vec<String>,
}

impl LabelInventory {
    pub fn new(language: impl Into<String>) -> Self {
        LabelInventory {
            language: language.into(),
            senses: Vec::new(),
            roles: vec![NULL_ROLE.to_string()],
        }
    }

    pub fn sense_index(&self, sense: &str) -> Option<usize> {
        self.senses.iter().position(|s| s == sense)
    }

    /// Index of a real role label; `NULL` itself is not a valid annotation.
    pub fn role_index(&self, role: &str) -> Option<usize> {
        self.roles.iter().skip(1).position(|r| r == role).map(|i| i + 1)
    }

    fn add_sense(&mut self, sense: &str) {
        if self.sense_index(sense).is_none() {
            self.senses.push(sense.to_string());
        }
    }

    fn add_role(&mut self, role: &str) {
        if role != NULL_ROLE && self.role_index(role).is_none() {
            self.roles.push(role.to_string());
        }
    }
}

pub fn build_inventory(corpus: &Corpus) -> Result<LabelInventory, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut inv = LabelInventory::new(corpus.language.clone());
    for sentence in &corpus.sentences {
        for frame in &sentence.frames {
            inv.add_sense(&frame.sense);
            for role in frame.roles.values() {
                inv.add_role(role);
            }
        }
    }
    Ok(inv)
}
