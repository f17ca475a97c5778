//! Property tests over randomly generated inputs: codec losslessness for any
//! generator seed, structural soundness and order-independence of alignment,
//! metric bounds, and split-size conservation.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use radevent::alignment::{align, AlignItem};
use radevent::equivalence::{spans_equivalent, MatchMode};
use radevent::schema::Schema;
use radevent::scoring::prf;
use radevent::standoff::{parse_document, serialize_document};
use radevent::stats::split_sizes;
use radevent::{generate_synthetic_corpus, TextSpan};

fn span_strategy() -> impl Strategy<Value = TextSpan> {
    (0usize..60, 1usize..8)
        .prop_map(|(start, len)| TextSpan::contiguous(start, start + len).unwrap())
}

proptest! {
    /// Any generator seed yields a document whose text/ann serialization
    /// parses back to the same structure and re-serializes byte-identically.
    #[test]
    fn round_trip_holds_for_any_seed(seed: u64) {
        let schema = Schema::builtin();
        let doc = &generate_synthetic_corpus(&schema, 1, seed)[0];
        let (text, ann) = serialize_document(doc).expect("serializes");
        let reparsed = parse_document(&text, &ann, &doc.id).expect("parses back");
        let mut bare = doc.clone();
        bare.metadata = Default::default();
        prop_assert_eq!(&reparsed, &bare);
        prop_assert_eq!(serialize_document(&reparsed).expect("serializes"), (text, ann));
    }

    /// The matching returned by the aligner is internally sound — every pair
    /// is a real edge, ids are used at most once, and the unmatched lists are
    /// exactly the complement — and the whole result is independent of the
    /// order the annotations are presented in.
    #[test]
    fn alignment_is_sound_and_order_invariant(
        refs in prop::collection::vec(span_strategy(), 0..7),
        preds in prop::collection::vec(span_strategy(), 0..7),
        strict in any::<bool>(),
        shuffle_seed: u64,
    ) {
        let mode = if strict { MatchMode::Strict } else { MatchMode::Overlap };
        let ref_items: Vec<AlignItem> = refs
            .iter()
            .enumerate()
            .map(|(i, span)| AlignItem::new(format!("R{i}"), span))
            .collect();
        let pred_items: Vec<AlignItem> = preds
            .iter()
            .enumerate()
            .map(|(j, span)| AlignItem::new(format!("P{j}"), span))
            .collect();
        let edge = |i: usize, j: usize| spans_equivalent(mode, &refs[i], &preds[j]);
        let matching = align(&ref_items, &pred_items, edge);

        let mut used_ref = BTreeSet::new();
        let mut used_pred = BTreeSet::new();
        for (ref_id, pred_id) in &matching.pairs {
            let i: usize = ref_id[1..].parse().unwrap();
            let j: usize = pred_id[1..].parse().unwrap();
            prop_assert!(edge(i, j), "pair ({ref_id}, {pred_id}) is not an edge");
            prop_assert!(used_ref.insert(ref_id.clone()), "{ref_id} matched twice");
            prop_assert!(used_pred.insert(pred_id.clone()), "{pred_id} matched twice");
        }
        let unmatched_ref: BTreeSet<String> = matching.unmatched_ref.iter().cloned().collect();
        let unmatched_pred: BTreeSet<String> = matching.unmatched_pred.iter().cloned().collect();
        prop_assert_eq!(unmatched_ref.len(), matching.unmatched_ref.len());
        prop_assert_eq!(unmatched_pred.len(), matching.unmatched_pred.len());
        for (i, _) in refs.iter().enumerate() {
            let id = format!("R{i}");
            prop_assert!(used_ref.contains(&id) != unmatched_ref.contains(&id));
        }
        for (j, _) in preds.iter().enumerate() {
            let id = format!("P{j}");
            prop_assert!(used_pred.contains(&id) != unmatched_pred.contains(&id));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        let mut ref_order: Vec<usize> = (0..refs.len()).collect();
        let mut pred_order: Vec<usize> = (0..preds.len()).collect();
        ref_order.shuffle(&mut rng);
        pred_order.shuffle(&mut rng);
        let shuffled_refs: Vec<AlignItem> = ref_order
            .iter()
            .map(|&i| AlignItem::new(format!("R{i}"), &refs[i]))
            .collect();
        let shuffled_preds: Vec<AlignItem> = pred_order
            .iter()
            .map(|&j| AlignItem::new(format!("P{j}"), &preds[j]))
            .collect();
        let shuffled = align(&shuffled_refs, &shuffled_preds, |i, j| {
            edge(ref_order[i], pred_order[j])
        });
        prop_assert_eq!(matching, shuffled);
    }

    /// Spans survive a JSON round trip unchanged.
    #[test]
    fn spans_round_trip_through_json(span in span_strategy()) {
        let json = serde_json::to_string(&span).unwrap();
        let back: TextSpan = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(span, back);
    }

    /// Malformed fragment lists (empty pieces or out-of-order pieces) are
    /// rejected at construction.
    #[test]
    fn degenerate_fragments_are_rejected(start in 0usize..50, len in 1usize..8) {
        prop_assert!(TextSpan::contiguous(start, start).is_err());
        prop_assert!(TextSpan::new(vec![(start + len, start + len + 1), (start, start + len)]).is_err());
        prop_assert!(TextSpan::new(vec![]).is_err());
    }

    /// All three ratios stay within [0, 1]; F1 lies between precision and
    /// recall; the vacuous flag fires exactly on the all-zero cell.
    #[test]
    fn metric_values_stay_in_bounds(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
        let m = prf(tp, fp, fn_);
        for value in [m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&value));
        }
        let (lo, hi) = if m.precision <= m.recall {
            (m.precision, m.recall)
        } else {
            (m.recall, m.precision)
        };
        prop_assert!(m.f1 >= lo - 1e-12 && m.f1 <= hi + 1e-12);
        prop_assert_eq!(m.vacuous, tp == 0 && fp == 0 && fn_ == 0);
    }

    /// Largest-remainder sizes always conserve the total count.
    #[test]
    fn split_sizes_conserve_the_total(
        n in 0usize..5000,
        a in 0.05f64..1.0,
        b in 0.05f64..1.0,
        c in 0.05f64..1.0,
    ) {
        let sum = a + b + c;
        let (train, validation, test) = split_sizes(n, (a / sum, b / sum, c / sum));
        prop_assert_eq!(train + validation + test, n);
    }
}
