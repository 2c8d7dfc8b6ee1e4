//! Per-token contextual representations.
//!
//! A provider yields either a layer stack (toy and lookup providers), whose
//! top four layers are concatenated, or an already concatenated matrix (the
//! precomputed cache). The concatenation `h` is then projected to the
//! encoding `e = Swish(W h + b)` by the model.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence};
use crate::numerics::{swish_scalar, NumericsError, ParamId, ParamStore, Real, SwishLinear, Tensor};

mod cache;

pub use cache::{CacheError, EmbeddingCache, CACHE_MAGIC, CACHE_VERSION};

/// Number of top layers concatenated into `h`.
pub const TOP_LAYERS: usize = 4;

/// Name of the lookup provider's table in the model's parameter store.
pub const LOOKUP_TABLE: &str = "embedder.lookup.table";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedderError {
    #[error("layer stack has {0} layers, at least 4 are needed")]
    TooFewLayers(usize),
    #[error("layer {layer} has shape {found:?}, expected {expected:?}")]
    RaggedStack {
        layer: usize,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("toy embedding requested from a {0} provider")]
    WrongProvider(&'static str),
    #[error("precomputed-cache provider built without a loaded cache")]
    CacheNotLoaded,
    #[error("cache width {found} does not match configured width {expected}")]
    CacheWidth { expected: usize, found: usize },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Hidden states of every language-model layer for one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack<R> {
    layers: Vec<Tensor<R>>,
}

impl<R: Real> LayerStack<R> {
    pub fn new(layers: Vec<Tensor<R>>) -> Result<Self, EmbedderError> {
        if let Some(first) = layers.first() {
            let shape = first.shape().to_vec();
            for (k, layer) in layers.iter().enumerate() {
                if layer.shape() != shape.as_slice() || shape.len() != 2 {
                    return Err(EmbedderError::RaggedStack {
                        layer: k,
                        expected: shape,
                        found: layer.shape().to_vec(),
                    });
                }
            }
        }
        Ok(LayerStack { layers })
    }

    pub fn layers(&self) -> &[Tensor<R>] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn tokens(&self) -> usize {
        self.layers.first().map_or(0, Tensor::rows)
    }

    pub fn width(&self) -> usize {
        self.layers.first().map_or(0, Tensor::cols)
    }
}

/// `h` and its projection `e` for one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSequence<R> {
    pub h: Tensor<R>,
    pub e: Tensor<R>,
}

/// Row `i` is `[layer K | layer K−1 | layer K−2 | layer K−3]` at token `i`.
pub fn concat_top_layers<R: Real>(stack: &LayerStack<R>) -> Result<Tensor<R>, EmbedderError> {
    let k = stack.layer_count();
    if k < TOP_LAYERS {
        return Err(EmbedderError::TooFewLayers(k));
    }
    let top: Vec<&Tensor<R>> = stack.layers[k - TOP_LAYERS..].iter().rev().collect();
    Ok(Tensor::concat_cols(&top)?)
}

/// `e_i = Swish(W h_i + b)` row-wise.
pub fn project<R: Real>(h: &Tensor<R>, weight: &Tensor<R>, bias: &Tensor<R>) -> Result<Tensor<R>, EmbedderError> {
    let z = crate::numerics::linear(h, weight, bias)?;
    Ok(z.map(swish_scalar))
}

/// Gradients `(dh, dW, db)` of [`project`] for upstream `de`.
pub fn project_backward<R: Real>(
    h: &Tensor<R>,
    weight: &Tensor<R>,
    bias: &Tensor<R>,
    de: &Tensor<R>,
) -> Result<(Tensor<R>, Tensor<R>, Tensor<R>), EmbedderError> {
    let z = crate::numerics::linear(h, weight, bias)?;
    let mut dz = de.clone();
    for (g, &zi) in dz.data_mut().iter_mut().zip(z.data()) {
        *g *= crate::numerics::swish_derivative(zi);
    }
    Ok(crate::numerics::linear_backward(h, weight, &dz))
}

/// 64-bit FNV-1a.
fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Row for `(language, form, layer)`: uniform on `[−√3, √3]`, so unit variance.
fn toy_row<R: Real>(language: &str, form: &str, layer: usize, seed: u64, width: usize, out: &mut Vec<R>) {
    let key = fnv1a(&[
        language.as_bytes(),
        &[0x1f],
        form.as_bytes(),
        &[0x1f],
        &(layer as u64).to_le_bytes(),
        &seed.to_le_bytes(),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let bound = num_traits::Float::sqrt(3f64);
    out.extend((0..width).map(|_| R::of(rng.gen_range(-bound..bound))));
}

/// Deterministic stand-in for a pretrained language model.
pub fn toy_embed<R: Real>(sentence: &Sentence, spec: &EmbedderSpec) -> Result<LayerStack<R>, EmbedderError> {
    let EmbedderSpec::DeterministicToy { width, layers, seed } = *spec else {
        return Err(EmbedderError::WrongProvider(spec.kind_name()));
    };
    let n = sentence.len();
    let stack = (0..layers)
        .map(|k| {
            let mut data = Vec::with_capacity(n * width);
            for t in &sentence.tokens {
                toy_row(&sentence.language, &t.form, k, seed, width, &mut data);
            }
            Tensor::matrix(n, width, data)
        })
        .collect();
    LayerStack::new(stack)
}

/// Serializable description of an embedding provider.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EmbedderSpec {
    DeterministicToy {
        width: usize,
        layers: usize,
        #[serde(default)]
        seed: u64,
    },
    TrainableLookup {
        width: usize,
        #[serde(default = "default_true")]
        trainable: bool,
        /// `language U+001F form` keys; filled from training data when empty.
        #[serde(default)]
        vocabulary: Vec<String>,
    },
    PrecomputedCache {
        /// Width `D` of the stored, already concatenated vectors.
        width: usize,
        /// Cache file per language.
        paths: BTreeMap<String, String>,
    },
}

fn default_true() -> bool {
    true
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::DeterministicToy {
            width: 32,
            layers: 12,
            seed: 0,
        }
    }
}

impl EmbedderSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            EmbedderSpec::DeterministicToy { .. } => "deterministic-toy",
            EmbedderSpec::TrainableLookup { .. } => "trainable-lookup",
            EmbedderSpec::PrecomputedCache { .. } => "precomputed-cache",
        }
    }

    /// Width of `h` this provider produces.
    pub fn output_width(&self) -> usize {
        match *self {
            EmbedderSpec::DeterministicToy { width, .. } | EmbedderSpec::TrainableLookup { width, .. } => {
                TOP_LAYERS * width
            }
            EmbedderSpec::PrecomputedCache { width, .. } => width,
        }
    }
}

fn lookup_key(language: &str, form: &str) -> String {
    let mut k = String::with_capacity(language.len() + 1 + form.len());
    k.push_str(language);
    k.push('\u{1f}');
    k.push_str(form);
    k
}

/// Sorted, de-duplicated `(language, form)` keys of every token in `corpora`.
pub fn lookup_vocabulary<'a>(corpora: impl IntoIterator<Item = &'a Corpus>) -> Vec<String> {
    let mut keys = BTreeSet::new();
    for c in corpora {
        for s in &c.sentences {
            for t in &s.tokens {
                keys.insert(lookup_key(&s.language, &t.form));
            }
        }
    }
    keys.into_iter().collect()
}

/// A provider ready to embed sentences.
#[derive(Clone, Debug, PartialEq)]
pub enum Embedder {
    Toy(EmbedderSpec),
    Lookup {
        spec: EmbedderSpec,
        width: usize,
        /// Row of each key; row 0 is the shared unknown-token row.
        index: BTreeMap<String, usize>,
        table: ParamId,
    },
    Cached { spec: EmbedderSpec, cache: EmbeddingCache },
}

impl Embedder {
    /// Builds the provider, registering the lookup table in `store` when
    /// there is one. The cache provider needs its files already decoded.
    pub fn build<R: Real>(
        spec: &EmbedderSpec,
        store: &mut ParamStore<R>,
        rng: &mut impl Rng,
        cache: Option<EmbeddingCache>,
    ) -> Result<Self, EmbedderError> {
        match spec {
            EmbedderSpec::DeterministicToy { layers, .. } => {
                if *layers < TOP_LAYERS {
                    return Err(EmbedderError::TooFewLayers(*layers));
                }
                Ok(Embedder::Toy(spec.clone()))
            }
            EmbedderSpec::TrainableLookup { width, vocabulary, .. } => {
                let index = vocabulary.iter().enumerate().map(|(i, k)| (k.clone(), i + 1)).collect();
                let table = store.add_uniform(LOOKUP_TABLE, &[vocabulary.len() + 1, *width], *width, rng)?;
                Ok(Embedder::Lookup {
                    spec: spec.clone(),
                    width: *width,
                    index,
                    table,
                })
            }
            EmbedderSpec::PrecomputedCache { width, .. } => {
                let cache = cache.ok_or(EmbedderError::CacheNotLoaded)?;
                if cache.width() != *width && !cache.is_empty() {
                    return Err(EmbedderError::CacheWidth {
                        expected: *width,
                        found: cache.width(),
                    });
                }
                Ok(Embedder::Cached {
                    spec: spec.clone(),
                    cache,
                })
            }
        }
    }

    pub fn spec(&self) -> &EmbedderSpec {
        match self {
            Embedder::Toy(spec) | Embedder::Lookup { spec, .. } | Embedder::Cached { spec, .. } => spec,
        }
    }

    pub fn output_width(&self) -> usize {
        self.spec().output_width()
    }

    /// Parameter owned by this provider, if any.
    pub fn parameter(&self) -> Option<ParamId> {
        match self {
            Embedder::Lookup { table, .. } => Some(*table),
            _ => None,
        }
    }

    fn lookup_rows(&self, sentence: &Sentence) -> Vec<usize> {
        match self {
            Embedder::Lookup { index, .. } => sentence
                .tokens
                .iter()
                .map(|t| index.get(&lookup_key(&sentence.language, &t.form)).copied().unwrap_or(0))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// The `n × 4d` concatenation `h` for `sentence`.
    pub fn embed<R: Real>(&self, sentence: &Sentence, store: &ParamStore<R>) -> Result<Tensor<R>, EmbedderError> {
        match self {
            Embedder::Toy(spec) => concat_top_layers(&toy_embed(sentence, spec)?),
            Embedder::Lookup { width, table, .. } => {
                // one layer replicated four times, so `h` has the same layout
                // as for a real layer stack
                let table = store.value(*table);
                let rows = self.lookup_rows(sentence);
                let single = table.select_rows(&rows);
                let layers = (0..TOP_LAYERS).map(|_| single.clone()).collect();
                let stack = LayerStack::new(layers)?;
                debug_assert_eq!(stack.width(), *width);
                concat_top_layers(&stack)
            }
            Embedder::Cached { cache, .. } => Ok(cache.lookup(sentence)?.cast()),
        }
    }

    /// Accumulates `dh` into the lookup table's gradient; a no-op for
    /// providers without parameters.
    pub fn backward<R: Real>(&self, sentence: &Sentence, store: &mut ParamStore<R>, dh: &Tensor<R>) {
        let Embedder::Lookup { width, table, .. } = self else {
            return;
        };
        let rows = self.lookup_rows(sentence);
        let grad = store.grad_mut(*table);
        for (i, &r) in rows.iter().enumerate() {
            let d = dh.row(i);
            let g = grad.row_mut(r);
            for block in 0..TOP_LAYERS {
                for (gk, &dk) in g.iter_mut().zip(&d[block * width..(block + 1) * width]) {
                    *gk += dk;
                }
            }
        }
    }
}

/// Projection layer `e = Swish(W h + b)` registered as `universal.proj`.
pub fn projection_layer<R: Real>(
    store: &mut ParamStore<R>,
    in_dim: usize,
    d_e: usize,
    rng: &mut impl Rng,
) -> Result<SwishLinear, NumericsError> {
    SwishLinear::new(store, "universal.proj", in_dim, d_e, rng)
}
