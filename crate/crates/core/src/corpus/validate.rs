use alloc::string::String;
use alloc::vec::Vec;

use super::{LabelInventory, Sentence, NULL_ROLE};

/// One broken invariant: which field, at which (0-based) position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    EmptySentence,
    LanguageMismatch { expected: String, found: String },
    TokenIndex { expected: usize, found: usize },
    SenseWithoutPredicate,
    PredicateWithoutSense,
    FrameCount { frames: usize, predicates: usize },
    FrameOrder,
    OutOfRange { token_index: usize, tokens: usize },
    NotAPredicate { token_index: usize },
    SenseDisagrees { token: Option<String>, frame: String },
    UnknownSense(String),
    UnknownRole(String),
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}[{}]: {:?}", self.field, self.index, self.kind)
    }
}

/// Checks sentence and frame invariants and that every label is in `inv`.
pub fn validate_sentence(s: &Sentence, inv: &LabelInventory) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field, index, kind| out.push(Violation { field, index, kind });
    if s.tokens.is_empty() {
        push("tokens", 0, ViolationKind::EmptySentence);
    }
    if s.language != inv.language {
        push(
            "language",
            0,
            ViolationKind::LanguageMismatch {
                expected: inv.language.clone(),
                found: s.language.clone(),
            },
        );
    }
    for (i, t) in s.tokens.iter().enumerate() {
        if t.index != i + 1 {
            push(
                "tokens.index",
                i,
                ViolationKind::TokenIndex {
                    expected: i + 1,
                    found: t.index,
                },
            );
        }
        match (t.fill_pred, &t.pred_sense) {
            (true, None) => push("tokens.pred_sense", i, ViolationKind::PredicateWithoutSense),
            (false, Some(_)) => push("tokens.pred_sense", i, ViolationKind::SenseWithoutPredicate),
            _ => {}
        }
    }
    let predicates = s.tokens.iter().filter(|t| t.fill_pred).count();
    if predicates != s.frames.len() {
        push(
            "frames",
            0,
            ViolationKind::FrameCount {
                frames: s.frames.len(),
                predicates,
            },
        );
    }
    let n = s.tokens.len();
    for (j, frame) in s.frames.iter().enumerate() {
        if j > 0 && s.frames[j - 1].predicate_index >= frame.predicate_index {
            push("frames.predicate_index", j, ViolationKind::FrameOrder);
        }
        let p = frame.predicate_index;
        match p.checked_sub(1).and_then(|k| s.tokens.get(k)) {
            None => push(
                "frames.predicate_index",
                j,
                ViolationKind::OutOfRange {
                    token_index: p,
                    tokens: n,
                },
            ),
            Some(t) if !t.fill_pred => push("frames.predicate_index", j, ViolationKind::NotAPredicate { token_index: p }),
            Some(t) if t.pred_sense.as_deref() != Some(frame.sense.as_str()) => push(
                "frames.sense",
                j,
                ViolationKind::SenseDisagrees {
                    token: t.pred_sense.clone(),
                    frame: frame.sense.clone(),
                },
            ),
            Some(_) => {}
        }
        if inv.sense_index(&frame.sense).is_none() {
            push("frames.sense", j, ViolationKind::UnknownSense(frame.sense.clone()));
        }
        for (&arg, role) in &frame.roles {
            if arg == 0 || arg > n {
                push(
                    "frames.roles",
                    j,
                    ViolationKind::OutOfRange {
                        token_index: arg,
                        tokens: n,
                    },
                );
            }
            if role == NULL_ROLE || inv.role_index(role).is_none() {
                push("frames.roles", j, ViolationKind::UnknownRole(role.clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_inventory, parse_conll09_str};

    const THREE: &str = "1\tJohn\tjohn\t_\tNNP\t_\t_\t_\t_\t_\t_\t_\t_\t_\tA0\n\
2\teats\teat\t_\tVBZ\t_\t_\t_\t_\t_\t_\t_\tY\teat.01\t_\n\
3\tapples\tapple\t_\tNNS\t_\t_\t_\t_\t_\t_\t_\t_\t_\tA1\n\n";

    fn fixture() -> (Sentence, LabelInventory) {
        let c = parse_conll09_str(THREE, "en").unwrap();
        let inv = build_inventory(&c).unwrap();
        (c.sentences[0].clone(), inv)
    }

    #[test]
    fn well_formed_has_no_violations() {
        let (s, inv) = fixture();
        assert_eq!(validate_sentence(&s, &inv), []);
    }

    #[test]
    fn frame_past_end_is_out_of_range() {
        let (mut s, inv) = fixture();
        s.frames[0].predicate_index = 4;
        let v = validate_sentence(&s, &inv);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "frames.predicate_index");
        assert_eq!(v[0].kind, ViolationKind::OutOfRange { token_index: 4, tokens: 3 });
    }

    #[test]
    fn unknown_role_is_reported_once() {
        let (mut s, inv) = fixture();
        s.frames[0].roles.insert(3, String::from("A9"));
        let v = validate_sentence(&s, &inv);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::UnknownRole(String::from("A9")));
    }

    #[test]
    fn frame_count_mismatch() {
        let (mut s, inv) = fixture();
        s.frames.clear();
        let v = validate_sentence(&s, &inv);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::FrameCount { frames: 0, predicates: 1 });
    }

    #[test]
    fn language_mismatch() {
        let (mut s, inv) = fixture();
        s.language = String::from("fa");
        assert_eq!(validate_sentence(&s, &inv).len(), 1);
    }
}
