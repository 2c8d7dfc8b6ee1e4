//! The CoNLL-2009 dependency SRL data model and its columnar file format.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

mod conll;
mod inventory;
mod sample;
mod validate;

pub use conll::{parse_conll09, parse_conll09_str, write_conll09, ParseError, ParseErrorKind};
pub use inventory::{build_inventory, CorpusError, LabelInventory, NULL_ROLE};
pub use sample::{sample_fraction, Fraction, FractionError};
pub use validate::{validate_sentence, Violation, ViolationKind};

/// Columns the model never reads, kept verbatim so files round-trip.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntacticColumns {
    pub plemma: String,
    pub ppos: String,
    pub feat: String,
    pub pfeat: String,
    pub head: String,
    pub phead: String,
    pub deprel: String,
    pub pdeprel: String,
}

impl Default for SyntacticColumns {
    fn default() -> Self {
        let blank = || String::from("_");
        SyntacticColumns {
            plemma: blank(),
            ppos: blank(),
            feat: blank(),
            pfeat: blank(),
            head: blank(),
            phead: blank(),
            deprel: blank(),
            pdeprel: blank(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub pos: String,
    pub fill_pred: bool,
    /// Present exactly when `fill_pred` is set, e.g. `"eat.01"`.
    pub pred_sense: Option<String>,
    pub syntax: SyntacticColumns,
}

impl Token {
    pub fn new(index: usize, form: impl Into<String>, lemma: impl Into<String>, pos: impl Into<String>) -> Self {
        Token {
            index,
            form: form.into(),
            lemma: lemma.into(),
            pos: pos.into(),
            fill_pred: false,
            pred_sense: None,
            syntax: SyntacticColumns::default(),
        }
    }
}

/// One predicate and its arguments, keyed by 1-based token index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateFrame {
    pub predicate_index: usize,
    pub sense: String,
    pub roles: BTreeMap<usize, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub language: String,
    pub tokens: Vec<Token>,
    /// Ordered by `predicate_index`.
    pub frames: Vec<PredicateFrame>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Key used by the embedding cache: language, unit separator, id.
    pub fn cache_key(&self) -> String {
        let mut key = String::with_capacity(self.language.len() + 1 + self.id.len());
        key.push_str(&self.language);
        key.push('\u{1f}');
        key.push_str(&self.id);
        key
    }

    /// Copy with every predicate annotation removed.
    pub fn without_frames(&self) -> Sentence {
        let mut s = self.clone();
        s.frames.clear();
        for t in &mut s.tokens {
            t.fill_pred = false;
            t.pred_sense = None;
        }
        s
    }

    /// Replaces the annotation with `frames`, updating the predicate columns.
    pub fn set_frames(&mut self, frames: Vec<PredicateFrame>) {
        for t in &mut self.tokens {
            t.fill_pred = false;
            t.pred_sense = None;
        }
        for f in &frames {
            if let Some(t) = self.tokens.get_mut(f.predicate_index.wrapping_sub(1)) {
                t.fill_pred = true;
                t.pred_sense = Some(f.sense.clone());
            }
        }
        self.frames = frames;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub language: String,
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(language: impl Into<String>) -> Self {
        Corpus {
            language: language.into(),
            sentences: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn without_frames(&self) -> Corpus {
        Corpus {
            language: self.language.clone(),
            sentences: self.sentences.iter().map(Sentence::without_frames).collect(),
        }
    }
}
