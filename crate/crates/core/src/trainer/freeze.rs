use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::model::SrlModel;
use crate::numerics::Real;

/// Name-path roots every model has, even when nothing lives under them
/// (the toy and cache providers own no parameters).
pub const PARAMETER_ROOTS: [&str; 3] = ["embedder.", "universal.", "decoder."];

/// Parameters whose name starts with any of `prefixes` are held fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FreezePolicy {
    pub prefixes: Vec<String>,
}

impl FreezePolicy {
    pub fn new<S: Into<String>>(prefixes: impl IntoIterator<Item = S>) -> Self {
        FreezePolicy {
            prefixes: prefixes.into_iter().map(Into::into).collect(),
        }
    }

    pub fn with(mut self, prefix: &str) -> Self {
        if !self.prefixes.iter().any(|p| p == prefix) {
            self.prefixes.push(prefix.into());
        }
        self
    }

    pub fn freezes(&self, name: &str) -> bool {
        self.prefixes.iter().any(|p| name.starts_with(p.as_str()))
    }
}

/// Sets `trainable` on every parameter; returns how many were frozen.
///
/// A prefix must match at least one parameter or be one of
/// [`PARAMETER_ROOTS`]; anything else is a configuration error.
pub fn apply_freeze<R: Real>(model: &mut SrlModel<R>, policy: &FreezePolicy) -> Result<usize, TrainError> {
    for prefix in &policy.prefixes {
        let known = PARAMETER_ROOTS.contains(&prefix.as_str());
        if !known && !model.params().names().any(|n| n.starts_with(prefix.as_str())) {
            return Err(TrainError::UnresolvedPrefix(prefix.clone()));
        }
    }
    let mut frozen = 0;
    for p in model.params_mut().iter_mut() {
        p.trainable = !policy.freezes(&p.name);
        frozen += usize::from(!p.trainable);
    }
    Ok(frozen)
}
