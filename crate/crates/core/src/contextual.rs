//! Contextual input construction: pad the candidate list to `C` entries and
//! splice each (possibly padded) candidate into the original sentence.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::PiiRecord;
use crate::error::{Error, Result};

pub const DEFAULT_PAD_TOKEN: &str = "[PAD]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextualExample {
    pub record_id: String,
    pub original_text: String,
    /// Exactly `C` entries; real candidates first, then pad tokens.
    pub padded_candidates: Vec<String>,
    /// `original_text` with the span replaced by each padded candidate.
    pub generalized_sentences: Vec<String>,
    /// `true` for real candidates.
    pub pad_mask: Vec<bool>,
    pub target_level: usize,
    pub all_levels: BTreeSet<usize>,
}

impl ContextualExample {
    pub fn max_candidates(&self) -> usize {
        self.pad_mask.len()
    }

    pub fn num_real(&self) -> usize {
        self.pad_mask.iter().filter(|&&m| m).count()
    }
}

pub fn build_contextual_example(
    record: &PiiRecord,
    max_candidates: usize,
    pad_token: &str,
) -> Result<ContextualExample> {
    let m = record.num_candidates();
    if m > max_candidates {
        return Err(Error::TooManyCandidates {
            record_id: record.id.clone(),
            count: m,
            max: max_candidates,
        });
    }
    if record.byte_span().is_none() {
        return Err(Error::validation(&record.id, "span offsets out of range"));
    }

    let padded_candidates: Vec<String> = record
        .candidates
        .iter()
        .cloned()
        .chain(std::iter::repeat_n(
            pad_token.to_owned(),
            max_candidates - m,
        ))
        .collect();
    let generalized_sentences = padded_candidates.iter().map(|c| record.splice(c)).collect();
    let pad_mask = (0..max_candidates).map(|i| i < m).collect();

    Ok(ContextualExample {
        record_id: record.id.clone(),
        original_text: record.text.clone(),
        padded_candidates,
        generalized_sentences,
        pad_mask,
        target_level: record.majority_level,
        all_levels: record.all_levels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SemanticType, SemanticTypeSet};

    fn senator() -> PiiRecord {
        PiiRecord {
            id: "t1".into(),
            text: "The person (born August 22, 1935) is a Canadian lawyer and former Senator."
                .into(),
            span_start: 17,
            span_end: 32,
            span_text: "August 22, 1935".into(),
            semantic_type: SemanticTypeSet::default().get("DATETIME").unwrap(),
            candidates: vec!["1935".into(), "date in 1930s".into(), "***".into()],
            majority_level: 2,
            all_levels: [2].into_iter().collect(),
        }
    }

    #[test]
    fn senator_padded_to_five() {
        let ex = build_contextual_example(&senator(), 5, DEFAULT_PAD_TOKEN).unwrap();
        assert_eq!(ex.generalized_sentences.len(), 5);
        assert_eq!(
            ex.generalized_sentences[0],
            "The person (born 1935) is a Canadian lawyer and former Senator."
        );
        assert_eq!(
            ex.generalized_sentences[1],
            "The person (born date in 1930s) is a Canadian lawyer and former Senator."
        );
        assert_eq!(
            ex.generalized_sentences[2],
            "The person (born ***) is a Canadian lawyer and former Senator."
        );
        let padded = "The person (born [PAD]) is a Canadian lawyer and former Senator.";
        assert_eq!(ex.generalized_sentences[3], padded);
        assert_eq!(ex.generalized_sentences[4], padded);
        assert_eq!(ex.pad_mask, vec![true, true, true, false, false]);
        assert_eq!(ex.target_level, 2);
    }

    #[test]
    fn full_list_has_no_padding() {
        let ex = build_contextual_example(&senator(), 3, DEFAULT_PAD_TOKEN).unwrap();
        assert!(ex.pad_mask.iter().all(|&m| m));
        assert!(!ex.generalized_sentences.iter().any(|s| s.contains("[PAD]")));
    }

    #[test]
    fn too_many_candidates_is_an_error() {
        let err = build_contextual_example(&senator(), 2, DEFAULT_PAD_TOKEN).unwrap_err();
        assert!(matches!(
            err,
            Error::TooManyCandidates {
                count: 3,
                max: 2,
                ..
            }
        ));
    }

    #[test]
    fn span_at_text_start() {
        let rec = PiiRecord {
            id: "s0".into(),
            text: "Oslo is cold.".into(),
            span_start: 0,
            span_end: 4,
            span_text: "Oslo".into(),
            semantic_type: SemanticType {
                label: "LOC".into(),
                code: 2,
            },
            candidates: vec!["a Norwegian city".into()],
            majority_level: 1,
            all_levels: [1].into_iter().collect(),
        };
        let ex = build_contextual_example(&rec, 2, "<pad>").unwrap();
        assert_eq!(ex.generalized_sentences[0], "a Norwegian city is cold.");
        assert_eq!(ex.generalized_sentences[1], "<pad> is cold.");
    }

    #[test]
    fn only_the_annotated_occurrence_is_replaced() {
        let text = "Paris met Paris in Paris.";
        let rec = PiiRecord {
            id: "dup".into(),
            text: text.into(),
            span_start: 10,
            span_end: 15,
            span_text: "Paris".into(),
            semantic_type: SemanticType {
                label: "PERSON".into(),
                code: 5,
            },
            candidates: vec!["someone".into()],
            majority_level: 1,
            all_levels: [1].into_iter().collect(),
        };
        let ex = build_contextual_example(&rec, 1, DEFAULT_PAD_TOKEN).unwrap();
        assert_eq!(ex.generalized_sentences[0], "Paris met someone in Paris.");
    }
}
