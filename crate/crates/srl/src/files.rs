//! Corpus and embedding-cache files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use srl_core::corpus::{parse_conll09, write_conll09, Corpus, Sentence};
use srl_core::embedder::{CacheError, EmbedderSpec, EmbeddingCache};
use srl_core::numerics::Tensor;

use crate::error::{Error, Result};

pub fn read_corpus(path: &Path, language: &str) -> Result<Corpus> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_conll09(&bytes, language).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    write_text(path, &write_conll09(corpus))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cache_error(path: &Path, source: CacheError) -> Error {
    Error::Cache {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `entries` (sentence key → `n × D` matrix) as a cache file.
pub fn write_cache(entries: &BTreeMap<String, Tensor<f32>>, path: &Path) -> Result<()> {
    let cache = EmbeddingCache::from_entries(entries.clone()).map_err(|e| cache_error(path, e))?;
    fs::write(path, cache.encode()).map_err(|e| Error::io(path, e))
}

pub fn read_cache_file(path: &Path) -> Result<EmbeddingCache> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingCache::decode(&bytes).map_err(|e| cache_error(path, e))
}

/// The stored `n × D` matrix for `sentence`.
pub fn read_cache(path: &Path, sentence: &Sentence) -> Result<Tensor<f32>> {
    let cache = read_cache_file(path)?;
    cache.lookup(sentence).cloned().map_err(|e| cache_error(path, e))
}

/// Loads and merges the files a precomputed-cache spec names; `None` for
/// other providers.
pub fn load_embedder_cache(spec: &EmbedderSpec) -> Result<Option<EmbeddingCache>> {
    let EmbedderSpec::PrecomputedCache { width, paths } = spec else {
        return Ok(None);
    };
    let mut merged = EmbeddingCache::new(*width);
    for path in paths.values() {
        let path = Path::new(path);
        merged.merge(read_cache_file(path)?).map_err(|e| cache_error(path, e))?;
    }
    Ok(Some(merged))
}
