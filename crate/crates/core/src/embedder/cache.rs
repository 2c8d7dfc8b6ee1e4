//! Binary cache of precomputed per-token vectors.
//!
//! ```text
//! "SRLE"  version:u32=1  D:u32  count:u64
//! count × ( key_len:u32  key:UTF-8  n:u32  n·D × f32 )
//! ```
//!
//! All integers and floats are little-endian. Keys are
//! `language + U+001F + sentence id`; entries are written in key order.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::Sentence;
use crate::numerics::Tensor;

pub const CACHE_MAGIC: &[u8; 4] = b"SRLE";
pub const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CacheError {
    #[error("not an embedding cache (bad magic)")]
    BadMagic,
    #[error("unsupported cache version {0}")]
    UnsupportedVersion(u32),
    #[error("cache truncated at byte {0}")]
    Truncated(usize),
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("entry key is not valid UTF-8")]
    InvalidKey,
    #[error("entry {key:?} has width {found}, cache width is {expected}")]
    InconsistentWidth { key: String, expected: usize, found: usize },
    #[error("duplicate entry {0:?}")]
    DuplicateKey(String),
    #[error("no cached vectors for sentence {id:?} ({language})")]
    MissingKey { language: String, id: String },
    #[error("cached vectors for sentence {id:?} have {found} rows, sentence has {expected} tokens")]
    RowCountMismatch { id: String, expected: usize, found: usize },
}

/// In-memory form of a cache file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingCache {
    width: usize,
    entries: BTreeMap<String, Tensor<f32>>,
}

impl EmbeddingCache {
    pub fn new(width: usize) -> Self {
        EmbeddingCache {
            width,
            entries: BTreeMap::new(),
        }
    }

    /// Builds a cache from `key → n × D` matrices; all must share `D`.
    /// An empty map gives width 0.
    pub fn from_entries(entries: BTreeMap<String, Tensor<f32>>) -> Result<Self, CacheError> {
        let width = entries.values().next().map_or(0, |m| m.cols());
        let mut cache = EmbeddingCache::new(width);
        for (key, m) in entries {
            cache.insert(key, m)?;
        }
        Ok(cache)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<String, Tensor<f32>> {
        &self.entries
    }

    pub fn insert(&mut self, key: String, matrix: Tensor<f32>) -> Result<(), CacheError> {
        if matrix.cols() != self.width {
            return Err(CacheError::InconsistentWidth {
                key,
                expected: self.width,
                found: matrix.cols(),
            });
        }
        let rows = matrix.rows();
        let matrix = Tensor::matrix(rows, self.width, matrix.into_data());
        self.entries.insert(key, matrix);
        Ok(())
    }

    /// Merges `other` into `self`; widths must agree unless one side is empty.
    pub fn merge(&mut self, other: EmbeddingCache) -> Result<(), CacheError> {
        if self.entries.is_empty() {
            self.width = other.width;
        }
        for (key, m) in other.entries {
            if self.entries.contains_key(&key) {
                return Err(CacheError::DuplicateKey(key));
            }
            self.insert(key, m)?;
        }
        Ok(())
    }

    /// Stored matrix for `sentence`, checked against its token count.
    pub fn lookup(&self, sentence: &Sentence) -> Result<&Tensor<f32>, CacheError> {
        let m = self.entries.get(&sentence.cache_key()).ok_or_else(|| CacheError::MissingKey {
            language: sentence.language.clone(),
            id: sentence.id.clone(),
        })?;
        if m.rows() != sentence.len() {
            return Err(CacheError::RowCountMismatch {
                id: sentence.id.clone(),
                expected: sentence.len(),
                found: m.rows(),
            });
        }
        Ok(m)
    }

    pub fn encode(&self) -> Vec<u8> {
        let payload: usize = self.entries.iter().map(|(k, m)| 8 + k.len() + 4 * m.len()).sum();
        let mut out = Vec::with_capacity(20 + payload);
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (key, m) in &self.entries {
            out.extend_from_slice(&(key.len() as u32).to_le_bytes());
            out.extend_from_slice(key.as_bytes());
            out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CacheError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CACHE_MAGIC {
            return Err(CacheError::BadMagic);
        }
        let version = r.u32()?;
        if version != CACHE_VERSION {
            return Err(CacheError::UnsupportedVersion(version));
        }
        let width = r.u32()? as usize;
        let count = r.u64()?;
        let mut cache = EmbeddingCache::new(width);
        for _ in 0..count {
            let key_len = r.u32()? as usize;
            let key = core::str::from_utf8(r.take(key_len)?)
                .map_err(|_| CacheError::InvalidKey)?
                .to_string();
            let rows = r.u32()? as usize;
            let len = rows.checked_mul(width).ok_or(CacheError::Truncated(r.pos))?;
            let raw = r.take(len.checked_mul(4).ok_or(CacheError::Truncated(r.pos))?)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if cache.entries.contains_key(&key) {
                return Err(CacheError::DuplicateKey(key));
            }
            cache.entries.insert(key, Tensor::matrix(rows, width, data));
        }
        if r.pos != bytes.len() {
            return Err(CacheError::TrailingBytes(bytes.len() - r.pos));
        }
        Ok(cache)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CacheError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(CacheError::Truncated(self.bytes.len())),
        }
    }

    fn u32(&mut self) -> Result<u32, CacheError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64, CacheError> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_le_bytes(a))
    }
}
