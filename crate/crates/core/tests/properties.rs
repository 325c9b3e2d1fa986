mod common;

use std::collections::BTreeSet;
use std::io::Cursor;

use genlevel_core::context_model::{forward, masked_argmax, masked_softmax};
use genlevel_core::corpus::{read_records, write_records};
use genlevel_core::encoder::hashed_embed;
use genlevel_core::eval::evaluate;
use genlevel_core::feature_model::restrict_to_candidates;
use genlevel_core::{
    build_contextual_example, filter_by_max_candidates, EmbeddingStore, PiiRecord, SemanticType,
    SemanticTypeSet, DEFAULT_PAD_TOKEN,
};
use proptest::prelude::*;

fn arb_record() -> impl Strategy<Value = PiiRecord> {
    (
        "[a-zA-Zé北 ,.]{0,12}",
        "[a-zA-Z0-9é北]{1,8}",
        "[a-zA-Z ,.ü]{0,12}",
        prop::collection::vec("[a-z0-9 ]{1,10}", 1..7),
        any::<prop::sample::Index>(),
        prop::sample::select(vec!["DATETIME", "LOC", "PERSON"]),
        prop::collection::vec(any::<prop::sample::Index>(), 0..3),
    )
        .prop_map(|(pre, span, post, candidates, maj, label, extra)| {
            let m = candidates.len();
            let majority_level = maj.index(m) + 1;
            let mut all_levels: BTreeSet<usize> = extra.iter().map(|i| i.index(m) + 1).collect();
            all_levels.insert(majority_level);
            let span_start = pre.chars().count();
            PiiRecord {
                id: String::new(),
                text: format!("{pre}{span}{post}"),
                span_start,
                span_end: span_start + span.chars().count(),
                span_text: span,
                semantic_type: SemanticTypeSet::default().get(label).unwrap(),
                candidates,
                majority_level,
                all_levels,
            }
        })
}

fn arb_dataset() -> impl Strategy<Value = Vec<PiiRecord>> {
    prop::collection::vec(arb_record(), 0..12).prop_map(|mut v| {
        for (i, r) in v.iter_mut().enumerate() {
            r.id = format!("r{i}");
        }
        v
    })
}

proptest! {
    #[test]
    fn corpus_round_trips(records in arb_dataset()) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let mut types = SemanticTypeSet::default();
        let back = read_records(Cursor::new(buf), std::path::Path::new("mem"), &mut types).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn filter_is_idempotent_and_monotone(records in arb_dataset(), c in 1usize..8) {
        let once = filter_by_max_candidates(&records, c);
        prop_assert_eq!(&filter_by_max_candidates(&once, c), &once);
        prop_assert!(once.iter().all(|r| r.num_candidates() <= c));
        let bigger = filter_by_max_candidates(&records, c + 1);
        prop_assert!(once.len() <= bigger.len());
        prop_assert!(once.iter().all(|r| bigger.contains(r)));
    }

    #[test]
    fn splicing_keeps_context(r in arb_record(), extra in 0usize..3) {
        let c = r.num_candidates() + extra;
        let ex = build_contextual_example(&r, c, DEFAULT_PAD_TOKEN).unwrap();
        let (lo, hi) = r.byte_span().unwrap();
        let (prefix, suffix) = (&r.text[..lo], &r.text[hi..]);
        prop_assert_eq!(ex.generalized_sentences.len(), c);
        prop_assert_eq!(ex.num_real(), r.num_candidates());
        for (s, cand) in ex.generalized_sentences.iter().zip(&ex.padded_candidates) {
            prop_assert!(s.starts_with(prefix));
            prop_assert!(s.ends_with(suffix));
            prop_assert_eq!(s.len(), prefix.len() + cand.len() + suffix.len());
        }
        // Replacing the span by itself is the identity.
        prop_assert_eq!(r.splice(&r.span_text), r.text.clone());
    }

    #[test]
    fn hashed_embedding_matches_reference(text in "\\PC{0,40}", dim in 1usize..64) {
        let got = hashed_embed(&text, dim, 3);
        let want = common::reference_hashed_embed(&text, dim, 3);
        prop_assert_eq!(got.as_slice(), &want[..]);
        let norm = got.norm();
        prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn store_round_trips_bit_exactly(
        entries in prop::collection::btree_map("[a-z#0-9]{1,12}", prop::collection::vec(-1e30f32..1e30, 3), 0..8)
    ) {
        let mut store = EmbeddingStore::new(3);
        for (k, v) in &entries {
            store.insert(k.clone(), v.clone()).unwrap();
        }
        let mut bytes = Vec::new();
        store.write_to(&mut bytes).unwrap();
        let back = EmbeddingStore::read_from(Cursor::new(&bytes)).unwrap();
        for (k, v) in &entries {
            let got: Vec<u32> = back.get_raw(k).unwrap().iter().map(|x| x.to_bits()).collect();
            let want: Vec<u32> = v.iter().map(|x| x.to_bits()).collect();
            prop_assert_eq!(got, want);
        }
        prop_assert_eq!(back.len(), entries.len());
    }

    #[test]
    fn scores_non_negative_and_padding_inert(seed in any::<u64>(), c in 2usize..7, sign in prop::sample::select(vec![-1.0, 1.0])) {
        let mut rng = common::rng(seed);
        let dim = 6;
        let m = 1 + (seed as usize) % (c - 1);
        let params = common::random_params(&mut rng, dim);
        let ex = common::random_example(&mut rng, dim, c, m);
        let p = forward(&params, &ex.original, &ex.generalized, &ex.mask, sign).unwrap();
        prop_assert!(p.scores.iter().all(|&s| s >= 0.0));
        prop_assert!(p.predicted_level <= m);
        prop_assert!(p.probabilities[m..].iter().all(|&q| q == 0.0));
        let total: f64 = p.probabilities.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifting_logits_changes_nothing(logits in prop::collection::vec(-50.0f64..50.0, 1..7), shift in -100.0f64..100.0, pads in 0usize..3) {
        let n = logits.len();
        let mut z = logits.clone();
        z.extend(std::iter::repeat_n(f64::NEG_INFINITY, pads));
        let mask: Vec<bool> = (0..n + pads).map(|i| i < n).collect();
        let shifted: Vec<f64> = z.iter().map(|&v| if v.is_finite() { v + shift } else { v }).collect();
        let a = masked_softmax(&z, &mask);
        let b = masked_softmax(&shifted, &mask);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert_eq!(masked_argmax(&z, &mask), masked_argmax(&shifted, &mask));
    }

    #[test]
    fn metric_relations(seed in any::<u64>(), n in 1usize..80) {
        use rand::Rng;
        let mut rng = common::rng(seed);
        let records: Vec<PiiRecord> = (0..n)
            .map(|i| {
                let m = rng.gen_range(1..=6);
                let maj = rng.gen_range(1..=m);
                let extra = [rng.gen_range(1..=m)];
                common::record(&format!("r{i}"), maj, &extra, m)
            })
            .collect();
        let preds: Vec<usize> = records.iter().map(|r| rng.gen_range(1..=r.num_candidates())).collect();
        let e = evaluate(&preds, &records).unwrap();
        let want = common::brute_force(&records, &preds, e.confusion.levels);
        prop_assert!(e.all_selections_acc >= e.majority_vote_acc);
        prop_assert_eq!(e.weighted_support.recall, e.majority_vote_acc);
        prop_assert!((e.weighted_support.f1 - want.support.2).abs() < 1e-12);
        prop_assert!((e.weighted_literal.precision - want.literal.0).abs() < 1e-12);
        let total: usize = e.confusion.counts.iter().flatten().sum();
        prop_assert_eq!(total, n);
    }

    #[test]
    fn feature_predictions_stay_in_range(proba in prop::collection::vec(0.0f64..1.0, 1..7), m in 1usize..8) {
        let (level, restricted) = restrict_to_candidates(&proba, m);
        prop_assert!((1..=m).contains(&level));
        prop_assert_eq!(restricted.len(), m);
    }
}

#[test]
fn unknown_type_is_appended() {
    let line = r#"{"id":"a","text":"x y","span_start":0,"span_end":1,"span_text":"x","semantic_type":"EVENT","candidates":["c"],"majority_level":1,"all_levels":[1]}"#;
    let mut types = SemanticTypeSet::default();
    let recs = read_records(Cursor::new(line), std::path::Path::new("mem"), &mut types).unwrap();
    assert_eq!(
        recs[0].semantic_type,
        SemanticType {
            label: "EVENT".into(),
            code: 7
        }
    );
}
