//! Synthetic corpora with a fixed, memorizable grammar.
//!
//! English sentences are SVO, Persian (romanized) are SOV. Four predicate
//! senses per language, two of which share a lemma, and five roles:
//! `A0 A1 A2 AM-TMP AM-LOC`. Sentence `k` uses pattern `k % 4`; subjects,
//! objects and optional adjuncts are drawn from a seeded rng.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, PredicateFrame, Sentence, Token};

pub const ROLES: [&str; 5] = ["A0", "A1", "A2", "AM-TMP", "AM-LOC"];

struct Lexicon {
    language: &'static str,
    subjects: &'static [&'static str],
    objects: &'static [&'static str],
    businesses: &'static [&'static str],
    recipients: &'static [&'static str],
    times: &'static [&'static str],
    places: &'static [&'static str],
    /// (form, sense) for eat, give, run (motion), run (manage).
    verbs: [(&'static str, &'static str); 4],
    /// Marker before the recipient ("to" / "be").
    dative: &'static str,
    verb_final: bool,
}

const EN: Lexicon = Lexicon {
    language: "en",
    subjects: &["john", "mary", "tom", "sara", "the cat", "the boy"],
    objects: &["bread", "apples", "the book", "rice"],
    businesses: &["the company", "a shop", "the hotel"],
    recipients: &["peter", "anna", "the girl"],
    times: &["today", "yesterday"],
    places: &["there", "outside"],
    verbs: [("eats", "eat.01"), ("gives", "give.01"), ("runs", "run.01"), ("runs", "run.02")],
    dative: "to",
    verb_final: false,
};

const FA: Lexicon = Lexicon {
    language: "fa",
    subjects: &["ali", "maryam", "reza", "sara", "gorbe", "pesar"],
    objects: &["nan", "sib", "ketab", "berenj"],
    businesses: &["sherkat", "maghaze", "hotel"],
    recipients: &["parvin", "hasan", "dokhtar"],
    times: &["emruz", "dirooz"],
    places: &["anja", "birun"],
    verbs: [("khord", "khordan.01"), ("dad", "dadan.01"), ("david", "davidan.01"), ("david", "davidan.02")],
    dative: "be",
    verb_final: true,
};

/// One phrase: its words and the role its head (last word) fills.
struct Phrase {
    words: Vec<String>,
    pos: &'static str,
    role: Option<&'static str>,
}

fn phrase(text: &str, pos: &'static str, role: Option<&'static str>) -> Phrase {
    Phrase {
        words: text.split(' ').map(ToString::to_string).collect(),
        pos,
        role,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().unwrap_or("x")
}

fn generate(lex: &Lexicon, k: usize, rng: &mut ChaCha8Rng) -> Sentence {
    let pattern = k % 4;
    let (verb_form, sense) = lex.verbs[pattern];
    let subject = phrase(pick(rng, lex.subjects), "N", Some("A0"));
    let mut complements = Vec::new();
    match pattern {
        0 => complements.push(phrase(pick(rng, lex.objects), "N", Some("A1"))),
        1 => {
            complements.push(phrase(pick(rng, lex.objects), "N", Some("A1")));
            complements.push(phrase(lex.dative, "P", None));
            complements.push(phrase(pick(rng, lex.recipients), "N", Some("A2")));
        }
        3 => complements.push(phrase(pick(rng, lex.businesses), "N", Some("A1"))),
        _ => {}
    }
    let mut adjuncts = Vec::new();
    if rng.gen_bool(0.5) {
        adjuncts.push(phrase(pick(rng, lex.times), "ADV", Some("AM-TMP")));
    }
    if rng.gen_bool(0.5) {
        adjuncts.push(phrase(pick(rng, lex.places), "ADV", Some("AM-LOC")));
    }
    let verb = phrase(verb_form, "V", None);

    let mut order = vec![subject];
    if lex.verb_final {
        order.extend(adjuncts);
        order.extend(complements);
        order.push(verb);
    } else {
        order.push(verb);
        order.extend(complements);
        order.extend(adjuncts);
    }

    let mut tokens = Vec::new();
    let mut roles = BTreeMap::new();
    let mut predicate_index = 0;
    for p in order {
        let last = p.words.len() - 1;
        for (j, w) in p.words.iter().enumerate() {
            let index = tokens.len() + 1;
            let is_head = j == last;
            let pos = if is_head { p.pos } else { "DT" };
            let lemma = if p.pos == "V" {
                sense.split('.').next().unwrap_or(w).to_string()
            } else {
                w.clone()
            };
            tokens.push(Token::new(index, w.as_str(), lemma, pos));
            if is_head {
                if let Some(role) = p.role {
                    roles.insert(index, role.to_string());
                }
                if p.pos == "V" {
                    predicate_index = index;
                }
            }
        }
    }
    let mut sentence = Sentence {
        id: format!("{}", k + 1),
        language: lex.language.to_string(),
        tokens,
        frames: Vec::new(),
    };
    sentence.set_frames(vec![PredicateFrame {
        predicate_index,
        sense: sense.to_string(),
        roles,
    }]);
    sentence
}

fn lexicon(language: &str) -> &'static Lexicon {
    if language == "fa" {
        &FA
    } else {
        &EN
    }
}

/// `n` annotated sentences in `language` ("en" or "fa"); ids are `1..=n`.
pub fn synthetic_corpus(language: &str, n: usize, seed: u64) -> Corpus {
    let lex = lexicon(language);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv(lex.language));
    Corpus {
        language: lex.language.to_string(),
        sentences: (0..n).map(|k| generate(lex, k, &mut rng)).collect(),
    }
}

/// English and Persian corpora of `n_per_language` sentences each.
pub fn bilingual(n_per_language: usize, seed: u64) -> (Corpus, Corpus) {
    (
        synthetic_corpus("en", n_per_language, seed),
        synthetic_corpus("fa", n_per_language, seed),
    )
}

/// One three-token sentence per language, used for gradient checks.
pub fn three_token_pair() -> (Sentence, Sentence) {
    let make = |language: &str, words: [&str; 3], verb: usize, sense: &str| {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let lemma = if i + 1 == verb { sense.split('.').next().unwrap_or(w) } else { w };
                Token::new(i + 1, *w, lemma, if i + 1 == verb { "V" } else { "N" })
            })
            .collect();
        let mut s = Sentence {
            id: "1".into(),
            language: language.into(),
            tokens,
            frames: Vec::new(),
        };
        let args = (1..=3).filter(|&i| i != verb);
        let roles = args.zip(["A0", "A1"]).map(|(i, r)| (i, r.to_string())).collect();
        s.set_frames(vec![PredicateFrame {
            predicate_index: verb,
            sense: sense.into(),
            roles,
        }]);
        s
    };
    (
        make("en", ["john", "eats", "bread"], 2, "eat.01"),
        make("fa", ["ali", "nan", "khord"], 3, "khordan.01"),
    )
}

fn fnv(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// A random but valid corpus: 1–`max_tokens` tokens per sentence, random
/// predicates, senses drawn from `lemma.0d`, roles from [`ROLES`].
pub fn random_corpus(rng: &mut impl Rng, language: &str, sentences: usize, max_tokens: usize) -> Corpus {
    const WORDS: [&str; 8] = ["a", "bc", "d-e", "f.g", "h'i", "jk", "lm", "nó"];
    let mut corpus = Corpus::new(language);
    for k in 0..sentences {
        let n = rng.gen_range(1..=max_tokens.max(1));
        let tokens: Vec<Token> = (1..=n)
            .map(|i| {
                let w = WORDS[rng.gen_range(0..WORDS.len())];
                let mut t = Token::new(i, w, w, ["N", "V", "ADJ"][rng.gen_range(0..3)]);
                if rng.gen_bool(0.3) {
                    t.syntax.head = format!("{}", rng.gen_range(0..=n));
                    t.syntax.deprel = "SBJ".into();
                }
                t
            })
            .collect();
        let mut frames = Vec::new();
        for q in 1..=n {
            if rng.gen_bool(0.3) {
                let lemma = tokens[q - 1].lemma.clone();
                let mut roles = BTreeMap::new();
                for i in 1..=n {
                    if rng.gen_bool(0.4) {
                        roles.insert(i, ROLES[rng.gen_range(0..ROLES.len())].to_string());
                    }
                }
                frames.push(PredicateFrame {
                    predicate_index: q,
                    sense: format!("{lemma}.0{}", rng.gen_range(1..4)),
                    roles,
                });
            }
        }
        let mut s = Sentence {
            id: format!("{}", k + 1),
            language: language.into(),
            tokens,
            frames: Vec::new(),
        };
        s.set_frames(frames);
        corpus.sentences.push(s);
    }
    corpus
}

/// `n` single-token, unannotated sentences; enough for sampling tests.
pub fn sized_corpus(language: &str, n: usize) -> Corpus {
    Corpus {
        language: language.into(),
        sentences: (0..n)
            .map(|k| Sentence {
                id: format!("{}", k + 1),
                language: language.into(),
                tokens: vec![Token::new(1, "w", "w", "N")],
                frames: Vec::new(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_inventory, parse_conll09_str, validate_sentence, write_conll09};

    #[test]
    fn grammar_covers_four_senses_and_five_roles() {
        let (en, fa) = bilingual(25, 1);
        for c in [&en, &fa] {
            let inv = build_inventory(c).unwrap();
            assert_eq!(inv.senses.len(), 4);
            assert_eq!(inv.roles.len(), 6);
            for s in &c.sentences {
                assert!(validate_sentence(s, &inv).is_empty());
            }
        }
        let verb_last = fa.sentences.iter().all(|s| s.frames[0].predicate_index == s.len());
        assert!(verb_last);
    }

    #[test]
    fn deterministic_and_round_trips() {
        let (a, _) = bilingual(40, 9);
        assert_eq!(a, bilingual(40, 9).0);
        assert_eq!(parse_conll09_str(&write_conll09(&a), "en").unwrap(), a);
    }

    #[test]
    fn random_corpora_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c = random_corpus(&mut rng, "en", 5, 6);
            let inv = build_inventory(&c).unwrap();
            for s in &c.sentences {
                assert_eq!(validate_sentence(s, &inv), vec![]);
            }
        }
    }
}
