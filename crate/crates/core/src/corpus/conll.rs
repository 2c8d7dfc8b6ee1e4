//! CoNLL-2009 reader and writer.
//!
//! Token rows carry at least 14 tab-separated columns
//! (`ID FORM LEMMA PLEMMA POS PPOS FEAT PFEAT HEAD PHEAD DEPREL PDEPREL FILLPRED PRED`)
//! followed by one `APRED` column per predicate of the sentence. Sentences
//! are separated by blank lines. Sentence ids are not part of the format:
//! a sentence gets its 1-based ordinal as id unless a `# sent_id = …` line
//! precedes it, and the writer emits that line only for ids that differ
//! from the ordinal, so plain files stay plain.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Corpus, PredicateFrame, Sentence, SyntacticColumns, Token};

const FIXED_COLUMNS: usize = 14;
const SENT_ID: &str = "sent_id";

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("invalid UTF-8")]
    InvalidUtf8,
    #[error("expected at least 14 columns, found {found}")]
    TooFewColumns { found: usize },
    #[error("expected {expected} columns like the first row of the sentence, found {found}")]
    ColumnCountMismatch { expected: usize, found: usize },
    #[error("{apred_columns} APRED columns but {predicates} predicates marked FILLPRED=Y")]
    ApredCountMismatch { apred_columns: usize, predicates: usize },
    #[error("FILLPRED is Y but PRED is empty")]
    MissingSense,
    #[error("PRED {sense:?} set on a token without FILLPRED=Y")]
    SenseWithoutPredicate { sense: String },
    #[error("FILLPRED must be Y or _, found {found:?}")]
    BadFillPred { found: String },
    #[error("token ID {found:?} where {expected} was expected")]
    BadTokenId { found: String, expected: usize },
    #[error("comment line inside a sentence")]
    CommentInsideSentence,
}

/// Parses a CoNLL-2009 document. Invalid UTF-8 is reported at the line it
/// occurs on.
pub fn parse_conll09(bytes: &[u8], language: &str) -> Result<Corpus, ParseError> {
    match core::str::from_utf8(bytes) {
        Ok(text) => parse_conll09_str(text, language),
        Err(e) => {
            let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
            Err(ParseError {
                line,
                kind: ParseErrorKind::InvalidUtf8,
            })
        }
    }
}

pub fn parse_conll09_str(text: &str, language: &str) -> Result<Corpus, ParseError> {
    let mut corpus = Corpus::new(language);
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut pending_id: Option<String> = None;
    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !rows.is_empty() {
                let id = pending_id.take().unwrap_or_else(|| (corpus.len() + 1).to_string());
                corpus.sentences.push(build_sentence(id, language, &rows)?);
                rows.clear();
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if !rows.is_empty() {
                return Err(ParseError {
                    line: line_no,
                    kind: ParseErrorKind::CommentInsideSentence,
                });
            }
            if let Some(id) = parse_sent_id(comment) {
                pending_id = Some(id);
            }
            continue;
        }
        rows.push((line_no, line.split('\t').collect()));
    }
    if !rows.is_empty() {
        let id = pending_id.take().unwrap_or_else(|| (corpus.len() + 1).to_string());
        corpus.sentences.push(build_sentence(id, language, &rows)?);
    }
    Ok(corpus)
}

fn parse_sent_id(comment: &str) -> Option<String> {
    let rest = comment.trim_start().strip_prefix(SENT_ID)?;
    let value = rest.trim_start().strip_prefix('=')?;
    Some(value.trim().to_string())
}

fn build_sentence(id: String, language: &str, rows: &[(usize, Vec<&str>)]) -> Result<Sentence, ParseError> {
    let (first_line, first) = &rows[0];
    let width = first.len();
    if width < FIXED_COLUMNS {
        return Err(ParseError {
            line: *first_line,
            kind: ParseErrorKind::TooFewColumns { found: width },
        });
    }
    let mut tokens = Vec::with_capacity(rows.len());
    for (pos, (line, cols)) in rows.iter().enumerate() {
        let err = |kind| ParseError { line: *line, kind };
        if cols.len() != width {
            return Err(err(ParseErrorKind::ColumnCountMismatch {
                expected: width,
                found: cols.len(),
            }));
        }
        let expected = pos + 1;
        if cols[0].parse::<usize>().ok() != Some(expected) {
            return Err(err(ParseErrorKind::BadTokenId {
                found: cols[0].to_string(),
                expected,
            }));
        }
        let fill_pred = match cols[12] {
            "Y" => true,
            "_" => false,
            other => return Err(err(ParseErrorKind::BadFillPred { found: other.to_string() })),
        };
        let pred_sense = match (fill_pred, cols[13]) {
            (true, "_") => return Err(err(ParseErrorKind::MissingSense)),
            (true, sense) => Some(sense.to_string()),
            (false, "_") => None,
            (false, sense) => {
                return Err(err(ParseErrorKind::SenseWithoutPredicate {
                    sense: sense.to_string(),
                }))
            }
        };
        tokens.push(Token {
            index: expected,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            pos: cols[4].to_string(),
            fill_pred,
            pred_sense,
            syntax: SyntacticColumns {
                plemma: cols[3].to_string(),
                ppos: cols[5].to_string(),
                feat: cols[6].to_string(),
                pfeat: cols[7].to_string(),
                head: cols[8].to_string(),
                phead: cols[9].to_string(),
                deprel: cols[10].to_string(),
                pdeprel: cols[11].to_string(),
            },
        });
    }
    let apred_columns = width - FIXED_COLUMNS;
    let predicates: Vec<&Token> = tokens.iter().filter(|t| t.fill_pred).collect();
    if predicates.len() != apred_columns {
        return Err(ParseError {
            line: *first_line,
            kind: ParseErrorKind::ApredCountMismatch {
                apred_columns,
                predicates: predicates.len(),
            },
        });
    }
    let frames = predicates
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let roles: BTreeMap<usize, String> = rows
                .iter()
                .enumerate()
                .filter_map(|(pos, (_, cols))| {
                    let cell = cols[FIXED_COLUMNS + j];
                    (cell != "_").then(|| (pos + 1, cell.to_string()))
                })
                .collect();
            PredicateFrame {
                predicate_index: p.index,
                sense: p.pred_sense.clone().unwrap_or_default(),
                roles,
            }
        })
        .collect();
    Ok(Sentence {
        id,
        language: language.to_string(),
        tokens,
        frames,
    })
}

/// Serializes a corpus. Each sentence block ends with a blank line; an
/// empty corpus is the empty document.
pub fn write_conll09(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (k, sentence) in corpus.sentences.iter().enumerate() {
        if sentence.id != format!("{}", k + 1) {
            let _ = writeln!(out, "# {SENT_ID} = {}", sentence.id);
        }
        for token in &sentence.tokens {
            let s = &token.syntax;
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                token.index,
                token.form,
                token.lemma,
                s.plemma,
                token.pos,
                s.ppos,
                s.feat,
                s.pfeat,
                s.head,
                s.phead,
                s.deprel,
                s.pdeprel,
                if token.fill_pred { "Y" } else { "_" },
                token.pred_sense.as_deref().unwrap_or("_"),
            );
            for frame in &sentence.frames {
                out.push('\t');
                out.push_str(frame.roles.get(&token.index).map_or("_", String::as_str));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = "1\tJohn\tjohn\tjohn\tNNP\tNNP\t_\t_\t2\t2\tSBJ\tSBJ\t_\t_\tA0\n\
2\teats\teat\teat\tVBZ\tVBZ\t_\t_\t0\t0\tROOT\tROOT\tY\teat.01\t_\n\
3\t.\t.\t.\t.\t.\t_\t_\t2\t2\tP\tP\t_\t_\t_\n\n";

    #[test]
    fn three_token_block_round_trips_byte_identically() {
        let c = parse_conll09_str(THREE, "en").unwrap();
        assert_eq!(c.len(), 1);
        let s = &c.sentences[0];
        assert_eq!(s.id, "1");
        assert_eq!(s.frames.len(), 1);
        assert_eq!(s.frames[0].predicate_index, 2);
        assert_eq!(s.frames[0].sense, "eat.01");
        assert_eq!(s.frames[0].roles.get(&1).map(String::as_str), Some("A0"));
        assert_eq!(write_conll09(&c), THREE);
        assert_eq!(parse_conll09_str(&write_conll09(&c), "en").unwrap(), c);
    }

    #[test]
    fn single_token_without_predicate() {
        let c = parse_conll09_str("1\tHi\thi\thi\tUH\tUH\t_\t_\t0\t0\tROOT\tROOT\t_\t_\n", "en").unwrap();
        assert_eq!(c.sentences[0].tokens.len(), 1);
        assert!(c.sentences[0].frames.is_empty());
        assert_eq!(write_conll09(&c).lines().next().unwrap().split('\t').count(), 14);
    }

    #[test]
    fn empty_corpus_is_empty_document() {
        assert_eq!(write_conll09(&Corpus::new("en")), "");
        assert!(parse_conll09_str("", "en").unwrap().is_empty());
        assert!(parse_conll09_str("\n\n\n", "en").unwrap().is_empty());
    }

    #[test]
    fn crlf_and_missing_trailing_blank_are_accepted() {
        let text = THREE.trim_end().replace('\n', "\r\n");
        let c = parse_conll09_str(&text, "en").unwrap();
        assert_eq!(write_conll09(&c), THREE);
    }

    #[test]
    fn column_count_mismatch_names_line() {
        let bad = THREE.replacen("\tP\tP\t_\t_\t_", "\tP\tP\t_\t_", 1);
        let err = parse_conll09_str(&bad, "en").unwrap_err();
        assert_eq!(err.line, 3);
        assert_eq!(
            err.kind,
            ParseErrorKind::ColumnCountMismatch {
                expected: 15,
                found: 14
            }
        );
    }

    #[test]
    fn dangling_apred_column() {
        let bad = "1\ta\ta\ta\tX\tX\t_\t_\t0\t0\tR\tR\t_\t_\tA0\n\n";
        let err = parse_conll09_str(&format!("{THREE}{bad}"), "en").unwrap_err();
        assert_eq!(err.line, 5);
        assert_eq!(
            err.kind,
            ParseErrorKind::ApredCountMismatch {
                apred_columns: 1,
                predicates: 0
            }
        );
    }

    #[test]
    fn fillpred_without_sense() {
        let bad = THREE.replace("Y\teat.01", "Y\t_");
        let err = parse_conll09_str(&bad, "en").unwrap_err();
        assert_eq!((err.line, err.kind), (2, ParseErrorKind::MissingSense));
    }

    #[test]
    fn too_few_columns() {
        let err = parse_conll09_str("1\ta\tb\n", "en").unwrap_err();
        assert_eq!((err.line, err.kind), (1, ParseErrorKind::TooFewColumns { found: 3 }));
    }

    #[test]
    fn invalid_utf8_reports_line() {
        let mut bytes = THREE.as_bytes().to_vec();
        let at = THREE.find("eats").unwrap();
        bytes[at] = 0xff;
        let err = parse_conll09(&bytes, "en").unwrap_err();
        assert_eq!((err.line, err.kind), (2, ParseErrorKind::InvalidUtf8));
    }

    #[test]
    fn sentence_ids_survive_round_trip() {
        let mut c = parse_conll09_str(&format!("{THREE}{THREE}"), "fa").unwrap();
        assert_eq!(c.sentences[1].id, "2");
        c.sentences[0].id = String::from("train-17");
        let text = write_conll09(&c);
        assert!(text.starts_with("# sent_id = train-17\n"));
        assert_eq!(parse_conll09_str(&text, "fa").unwrap(), c);
    }

    #[test]
    fn bad_token_id() {
        let bad = THREE.replacen("2\teats", "5\teats", 1);
        let err = parse_conll09_str(&bad, "en").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::BadTokenId { expected: 2, .. }));
    }
}
