//! Shared-encoder, per-language-decoder SRL model.
//!
//! ```text
//! h  ──proj──▶ e ──residual BiLSTM×K′──▶ t ──▶ p = Swish(W^p t + b^p)
//!                                         └─▶ s = Swish(W^s t + b^s)
//! for each predicate position q:
//!   a⁰_i = t_q ⊕ t_i ──residual BiLSTM×K″──▶ a ──▶ r = Swish(W^r a + b^r)
//! per language l:  W^{p|l} p + b,  W^{s|l} s_q + b,  W^{r|l} r + b
//! ```
//!
//! Everything left of the decoders is one set of parameters used by every
//! language. Parameter name paths:
//!
//! * `embedder.lookup.table` (lookup provider only)
//! * `universal.proj.{W,b}`
//! * `universal.sent.bilstm{j}.{fwd,bwd}.{W_ih,W_hh,b}`
//! * `universal.pred.{W,b}`, `universal.sense.{W,b}`
//! * `universal.arg.bilstm{j}.{fwd,bwd}.{W_ih,W_hh,b}`
//! * `universal.role.{W,b}`
//! * `decoder.{lang}.{pred,sense,role}.{W,b}`

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabelInventory;
use crate::embedder::{projection_layer, Embedder, EmbedderError, EmbedderSpec, EmbeddingCache};
use crate::numerics::{Linear, NumericsError, ParamStore, Real, ResidualBiLstmStack, SwishLinear};

mod forward;
mod predict;

pub use forward::{ArgumentOutput, ForwardOutput, OutputGrads};
pub use predict::{sense_lemma, DecodeOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("language {0:?} is not registered in the model")]
    UnknownLanguage(String),
    #[error("predicate position {index} outside a sentence of {tokens} tokens")]
    PredicateOutOfRange { index: usize, tokens: usize },
    #[error("sense {sense:?} is not in the {language} inventory")]
    UnknownSense { language: String, sense: String },
    #[error("role {role:?} is not in the {language} inventory")]
    UnknownRole { language: String, role: String },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Embedder(#[from] EmbedderError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Output sizes of one language's decoders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSpec {
    pub code: String,
    pub senses: usize,
    pub roles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Width of the projected encoding `e`.
    pub d_e: usize,
    /// Hidden size of every LSTM direction.
    pub hidden: usize,
    /// Depth of the universal sentence encoder.
    pub sent_layers: usize,
    /// Depth of the universal predicate-argument encoder.
    pub arg_layers: usize,
    pub d_p: usize,
    pub d_s: usize,
    pub d_r: usize,
    pub languages: Vec<LanguageSpec>,
    pub seed: u64,
    /// Inverted dropout applied to `e`, `p`, `s` and `r` during training.
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_e: 128,
            hidden: 128,
            sent_layers: 2,
            arg_layers: 2,
            d_p: 128,
            d_s: 128,
            d_r: 128,
            languages: Vec::new(),
            seed: 13,
            dropout: 0.0,
        }
    }
}

impl ModelConfig {
    /// Width of `t`: `d_e + 2·h·K′`.
    pub fn sentence_width(&self) -> usize {
        self.d_e + 2 * self.hidden * self.sent_layers
    }

    /// Width of `a`: `2·width(t) + 2·h·K″`.
    pub fn argument_width(&self) -> usize {
        2 * self.sentence_width() + 2 * self.hidden * self.arg_layers
    }

    /// Replaces `languages` with the sizes of `inventories`.
    pub fn with_inventories(mut self, inventories: &[LabelInventory]) -> Self {
        self.languages = inventories
            .iter()
            .map(|inv| LanguageSpec {
                code: inv.language.clone(),
                senses: inv.senses.len(),
                roles: inv.roles.len(),
            })
            .collect();
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let widths = [
            ("d_e", self.d_e),
            ("hidden", self.hidden),
            ("d_p", self.d_p),
            ("d_s", self.d_s),
            ("d_r", self.d_r),
        ];
        if let Some((name, _)) = widths.iter().find(|(_, w)| *w == 0) {
            return Err(ModelError::Config(format!("{name} must be at least 1")));
        }
        if self.languages.is_empty() {
            return Err(ModelError::Config("no languages".into()));
        }
        for (i, l) in self.languages.iter().enumerate() {
            if self.languages[..i].iter().any(|o| o.code == l.code) {
                return Err(ModelError::Config(format!("language {:?} listed twice", l.code)));
            }
            if l.roles == 0 {
                return Err(ModelError::Config(format!("language {:?} has no NULL role", l.code)));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// Affine heads of one language.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageDecoder {
    pub predicate: Linear,
    pub sense: Linear,
    pub role: Linear,
}

#[derive(Clone, Debug)]
pub struct SrlModel<R> {
    config: ModelConfig,
    embedder: Embedder,
    params: ParamStore<R>,
    projection: SwishLinear,
    sentence_encoder: ResidualBiLstmStack,
    predicate_repr: SwishLinear,
    sense_repr: SwishLinear,
    argument_encoder: ResidualBiLstmStack,
    role_repr: SwishLinear,
    decoders: BTreeMap<String, LanguageDecoder>,
    inventories: BTreeMap<String, LabelInventory>,
}

impl<R: Real> SrlModel<R> {
    /// Initializes every parameter from `config.seed`. `config.languages` is
    /// derived from `inventories`. `cache` is required by the
    /// precomputed-cache provider and ignored otherwise.
    pub fn new(
        config: ModelConfig,
        embedder: &EmbedderSpec,
        inventories: &[LabelInventory],
        cache: Option<EmbeddingCache>,
    ) -> Result<Self, ModelError> {
        let config = config.with_inventories(inventories);
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamStore::new();
        let embedder = Embedder::build(embedder, &mut params, &mut rng, cache)?;
        let in_dim = embedder.output_width();
        if in_dim == 0 {
            return Err(ModelError::Config("embedding width is zero".into()));
        }
        let projection = projection_layer(&mut params, in_dim, config.d_e, &mut rng)?;
        let sentence_encoder = ResidualBiLstmStack::new(
            &mut params,
            "universal.sent",
            config.d_e,
            config.hidden,
            config.sent_layers,
            &mut rng,
        )?;
        let t_width = sentence_encoder.out_dim();
        let predicate_repr = SwishLinear::new(&mut params, "universal.pred", t_width, config.d_p, &mut rng)?;
        let sense_repr = SwishLinear::new(&mut params, "universal.sense", t_width, config.d_s, &mut rng)?;
        let argument_encoder = ResidualBiLstmStack::new(
            &mut params,
            "universal.arg",
            2 * t_width,
            config.hidden,
            config.arg_layers,
            &mut rng,
        )?;
        let role_repr = SwishLinear::new(
            &mut params,
            "universal.role",
            argument_encoder.out_dim(),
            config.d_r,
            &mut rng,
        )?;
        let mut decoders = BTreeMap::new();
        for lang in &config.languages {
            let prefix = format!("decoder.{}", lang.code);
            let decoder = LanguageDecoder {
                predicate: Linear::new(&mut params, &format!("{prefix}.pred"), config.d_p, 2, &mut rng)?,
                sense: Linear::new(&mut params, &format!("{prefix}.sense"), config.d_s, lang.senses, &mut rng)?,
                role: Linear::new(&mut params, &format!("{prefix}.role"), config.d_r, lang.roles, &mut rng)?,
            };
            decoders.insert(lang.code.clone(), decoder);
        }
        let inventories = inventories.iter().map(|inv| (inv.language.clone(), inv.clone())).collect();
        Ok(SrlModel {
            config,
            embedder,
            params,
            projection,
            sentence_encoder,
            predicate_repr,
            sense_repr,
            argument_encoder,
            role_repr,
            decoders,
            inventories,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    pub fn params(&self) -> &ParamStore<R> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<R> {
        &mut self.params
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.decoders.keys().map(String::as_str)
    }

    pub fn has_language(&self, language: &str) -> bool {
        self.decoders.contains_key(language)
    }

    pub fn inventory(&self, language: &str) -> Result<&LabelInventory, ModelError> {
        self.inventories
            .get(language)
            .ok_or_else(|| ModelError::UnknownLanguage(language.into()))
    }

    pub fn inventories(&self) -> impl Iterator<Item = &LabelInventory> {
        self.inventories.values()
    }

    pub fn decoder(&self, language: &str) -> Result<&LanguageDecoder, ModelError> {
        self.decoders
            .get(language)
            .ok_or_else(|| ModelError::UnknownLanguage(language.into()))
    }

    /// Name paths of the parameters that belong to `language` alone.
    pub fn language_parameter_names(&self, language: &str) -> Vec<&str> {
        let prefix = format!("decoder.{language}.");
        self.params.names().filter(|n| n.starts_with(&prefix)).collect()
    }

    /// Name paths shared by every language.
    pub fn shared_parameter_names(&self) -> Vec<&str> {
        self.params.names().filter(|n| !n.starts_with("decoder.")).collect()
    }
}

#[cfg(test)]
mod tests;
