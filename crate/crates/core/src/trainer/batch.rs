use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::corpus::Corpus;

/// Sentences of one language processed together in one optimizer step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub language: String,
    /// Positions in that language's corpus.
    pub sentences: Vec<usize>,
}

pub(crate) fn language_seed(seed: u64, language: &str) -> u64 {
    language
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
        ^ seed
}

/// One epoch of batches.
///
/// Each language is shuffled with its own seed derived from `seed` and its
/// code, then chunked. Batch `j` of a language with `c` batches is placed at
/// relative position `(2j + 1) / 2c`, ties broken by language code, so
/// languages interleave in proportion to their batch counts.
pub fn make_batches(
    corpora: &BTreeMap<String, Corpus>,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<Batch>, TrainError> {
    if batch_size == 0 {
        return Err(TrainError::Config("batch_size must be at least 1".into()));
    }
    // (position numerator, denominator, language rank, batch)
    let mut keyed: Vec<(u64, u64, usize, Batch)> = Vec::new();
    for (rank, (language, corpus)) in corpora.iter().enumerate() {
        if corpus.is_empty() {
            continue;
        }
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(language_seed(seed, language)));
        let chunks: Vec<&[usize]> = order.chunks(batch_size).collect();
        let count = chunks.len() as u64;
        for (j, chunk) in chunks.into_iter().enumerate() {
            let batch = Batch {
                language: language.clone(),
                sentences: chunk.to_vec(),
            };
            keyed.push((2 * j as u64 + 1, 2 * count, rank, batch));
        }
    }
    if keyed.is_empty() {
        return Err(TrainError::NoTrainingData);
    }
    keyed.sort_by(|a, b| {
        let lhs = a.0 as u128 * b.1 as u128;
        let rhs = b.0 as u128 * a.1 as u128;
        match lhs.cmp(&rhs) {
            Ordering::Equal => a.2.cmp(&b.2),
            o => o,
        }
    });
    Ok(keyed.into_iter().map(|k| k.3).collect())
}
