//! Inter-annotator agreement as pairwise F1 over doubly annotated documents.
//!
//! Agreement reuses the scorer wholesale: one annotator's documents act as
//! the reference, the other's as the prediction, and the per-category and
//! overall F1 columns constitute the agreement figures. Because F1 is
//! symmetric under swapping the two sides (precision and recall trade
//! places), the choice of which annotator plays "reference" does not affect
//! the agreement values.
//!
//! The conventional criterion is overlap mode; strict mode is accepted for
//! analysis but is not the reported agreement measure.

use crate::equivalence::MatchMode;
use crate::schema::Schema;
use crate::scoring::{score_corpus, ScoreError, ScoreReport};
use crate::standoff::Document;

/// Pairwise F1 between two annotators' versions of the same documents.
/// Both sides must cover the same document id set and validate against the
/// schema.
pub fn pairwise_agreement(
    annotator_a: &[Document],
    annotator_b: &[Document],
    schema: &Schema,
    mode: MatchMode,
) -> Result<ScoreReport, ScoreError> {
    score_corpus(annotator_a, annotator_b, schema, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::CategoryKey;
    use crate::standoff::parse_document;

    const TEXT: &str = "Mass is seen. Cyst is seen. Nodule is seen. Lesion is seen.";

    fn annotator_a() -> Vec<Document> {
        let ann = "T1\tLesion 0 4\tMass\nT2\tAssertion 8 12\tseen\n\
                   T3\tLesion 14 18\tCyst\nT4\tAssertion 22 26\tseen\n\
                   T5\tLesion 28 34\tNodule\nT6\tAssertion 38 42\tseen\n\
                   T7\tLesion 44 50\tLesion\nT8\tAssertion 54 58\tseen\n\
                   E1\tLesion:T1 Assertion:T2\nE2\tLesion:T3 Assertion:T4\n\
                   E3\tLesion:T5 Assertion:T6\nE4\tLesion:T7 Assertion:T8\n\
                   A1\tAssertion E1 present\nA2\tAssertion E2 present\n\
                   A3\tAssertion E3 present\nA4\tAssertion E4 present\n";
        vec![parse_document(TEXT, ann, "report1").unwrap()]
    }

    fn annotator_b() -> Vec<Document> {
        // Same annotations except the fourth Lesion event is missing.
        let ann = "T1\tLesion 0 4\tMass\nT2\tAssertion 8 12\tseen\n\
                   T3\tLesion 14 18\tCyst\nT4\tAssertion 22 26\tseen\n\
                   T5\tLesion 28 34\tNodule\nT6\tAssertion 38 42\tseen\n\
                   E1\tLesion:T1 Assertion:T2\nE2\tLesion:T3 Assertion:T4\n\
                   E3\tLesion:T5 Assertion:T6\n\
                   A1\tAssertion E1 present\nA2\tAssertion E2 present\n\
                   A3\tAssertion E3 present\n";
        vec![parse_document(TEXT, ann, "report1").unwrap()]
    }

    #[test]
    fn identical_annotators_agree_perfectly() {
        let a = annotator_a();
        let schema = Schema::builtin();
        let report = pairwise_agreement(&a, &a, &schema, MatchMode::Overlap).unwrap();
        for (key, m) in &report.rows {
            assert_eq!(m.f1, 1.0, "category {key}");
        }
        assert_eq!(report.overall.f1, 1.0);
    }

    #[test]
    fn one_missing_trigger_out_of_four_gives_six_sevenths() {
        let schema = Schema::builtin();
        let report =
            pairwise_agreement(&annotator_a(), &annotator_b(), &schema, MatchMode::Overlap)
                .unwrap();
        let lesion = &report.rows[&CategoryKey::trigger("Lesion")];
        assert_eq!((lesion.tp, lesion.fp, lesion.fn_), (3, 0, 1));
        assert!((lesion.f1 - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn swapping_annotators_preserves_f1_and_swaps_p_r() {
        let schema = Schema::builtin();
        let ab = pairwise_agreement(&annotator_a(), &annotator_b(), &schema, MatchMode::Overlap)
            .unwrap();
        let ba = pairwise_agreement(&annotator_b(), &annotator_a(), &schema, MatchMode::Overlap)
            .unwrap();
        for (key, m) in &ab.rows {
            let swapped = &ba.rows[key];
            assert_eq!(m.f1, swapped.f1, "category {key}");
            assert_eq!(m.precision, swapped.recall, "category {key}");
            assert_eq!(m.recall, swapped.precision, "category {key}");
        }
        assert_eq!(ab.overall.f1, ba.overall.f1);
    }
}
