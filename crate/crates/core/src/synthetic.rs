//! Seeded synthetic corpus whose labels depend on the words around the span.
//!
//! Every record names an entity of some semantic type and offers generic
//! descriptions of it as candidates ("a city", "a region", ...). The level an
//! annotator would pick is hinted by a cue word in the surrounding sentence:
//! the context mentions the correct description's head noun. Each entity also
//! has a preferred level, so its surface form alone carries some signal, but
//! only the context resolves the rest.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{PiiRecord, SemanticTypeSet};
use crate::seeds;

/// Candidate head nouns per type, most specific first.
const LEVEL_WORDS: &[(&str, [&str; 4])] = &[
    ("LOC", ["city", "region", "country", "continent"]),
    ("PERSON", ["athlete", "celebrity", "adult", "person"]),
    ("ORG", ["bank", "company", "business", "institution"]),
    ("DATETIME", ["weekday", "month", "season", "decade"]),
];

const ENTITIES: &[(&str, &[&str])] = &[
    (
        "LOC",
        &[
            "Oslo", "Quito", "Bergen", "Lyon", "Osaka", "Tromso", "Perth", "Malmo",
        ],
    ),
    (
        "PERSON",
        &[
            "Ada Byron",
            "Jon Snowe",
            "Mia Holt",
            "Raj Patel",
            "Li Wei",
            "Oskar Berg",
        ],
    ),
    (
        "ORG",
        &[
            "Nordbank",
            "Vexcorp",
            "Qualtex",
            "Brightwell",
            "Solvik Group",
            "Danmark Trust",
        ],
    ),
    (
        "DATETIME",
        &[
            "Tuesday",
            "March",
            "winter",
            "the nineties",
            "August",
            "Friday",
        ],
    ),
];

const OPENERS: &[&str] = &[
    "Yesterday",
    "According to the report",
    "In the interview",
    "Last time we checked",
    "Oddly enough",
    "As noted earlier",
];

const FILLERS: &[&str] = &[
    "quietly",
    "again",
    "at length",
    "with some pride",
    "in passing",
    "twice",
];

/// Knobs for [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_records: usize,
    pub seed: u64,
    /// Probability that a record's label is its entity's preferred level.
    pub preferred_prob: f64,
    /// Probability that the sentence carries the cue word.
    pub cue_prob: f64,
    /// Probability that a second annotator picked another level.
    pub disagreement_prob: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_records: 400,
            seed: 7,
            preferred_prob: 0.55,
            cue_prob: 0.85,
            disagreement_prob: 0.15,
        }
    }
}

/// Fully context-determined labels: used to check that training can fit.
pub fn separable(n_records: usize, seed: u64) -> Vec<PiiRecord> {
    generate(&SyntheticConfig {
        n_records,
        seed,
        preferred_prob: 0.0,
        cue_prob: 1.0,
        disagreement_prob: 0.0,
    })
}

/// Entity's preferred level: fixed per entity, skewed towards level 1.
fn preferred_level(seed: u64, entity: &str, m: usize) -> usize {
    let mut rng = seeds::rng_for(seed, &format!("preferred/{entity}"));
    if rng.gen_bool(0.5) {
        1
    } else {
        rng.gen_range(1..=m)
    }
}

pub fn generate(config: &SyntheticConfig) -> Vec<PiiRecord> {
    let types = SemanticTypeSet::default();
    let mut rng: ChaCha8Rng = seeds::rng_for(config.seed, "synthetic");
    (0..config.n_records)
        .map(|i| {
            let (label, words) = LEVEL_WORDS[rng.gen_range(0..LEVEL_WORDS.len())];
            let entities = ENTITIES.iter().find(|(l, _)| *l == label).unwrap().1;
            let entity = *entities.choose(&mut rng).unwrap();
            let m = rng.gen_range(3..=4);
            let preferred = preferred_level(config.seed, entity, m);

            let level = if config.preferred_prob > 0.0 && rng.gen_bool(config.preferred_prob) {
                preferred
            } else {
                rng.gen_range(1..=m)
            };
            let mut all_levels = BTreeSet::from([level]);
            if config.disagreement_prob > 0.0 && rng.gen_bool(config.disagreement_prob) {
                all_levels.insert(rng.gen_range(1..=m));
            }

            let opener = *OPENERS.choose(&mut rng).unwrap();
            let filler = *FILLERS.choose(&mut rng).unwrap();
            let prefix = format!("{opener}, the team mentioned ");
            let suffix = if rng.gen_bool(config.cue_prob) {
                format!(
                    " {filler}, calling it a {} worth watching.",
                    words[level - 1]
                )
            } else {
                format!(" {filler}, and nobody followed up.")
            };
            let text = format!("{prefix}{entity}{suffix}");
            let span_start = prefix.chars().count();

            PiiRecord {
                id: format!("syn-{i:05}"),
                span_start,
                span_end: span_start + entity.chars().count(),
                span_text: entity.to_owned(),
                text,
                semantic_type: types.get(label).expect("label is a default type"),
                candidates: words[..m].iter().map(|w| format!("a {w}")).collect(),
                majority_level: level,
                all_levels,
            }
        })
        .collect()
}
