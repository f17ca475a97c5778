//! Span and annotation equivalence predicates, in overlap and strict modes.
//!
//! Overlap is the primary evaluation criterion: two spans are equivalent if
//! their character ranges intersect at all, so a predicted "right pedicle" is
//! accepted against a reference "T12 right pedicle". Strict mode demands
//! identical fragment lists and is applied uniformly to triggers and
//! arguments.
//!
//! Arguments are judged relative to an already-computed trigger pairing:
//! an argument pair can only match when the triggers that own them were
//! matched to each other.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::standoff::TextSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Overlap,
    Strict,
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchMode::Overlap => write!(f, "overlap"),
            MatchMode::Strict => write!(f, "strict"),
        }
    }
}

impl std::str::FromStr for MatchMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overlap" => Ok(MatchMode::Overlap),
            "strict" => Ok(MatchMode::Strict),
            other => Err(format!(
                "unknown match mode '{other}' (expected overlap|strict)"
            )),
        }
    }
}

/// True iff some fragment of `a` intersects some fragment of `b`
/// (half-open intervals, so touching spans do not overlap).
pub fn spans_overlap(a: &TextSpan, b: &TextSpan) -> bool {
    a.intersects(b)
}

/// Span equivalence under the given mode: intersection for overlap, exact
/// fragment-list identity for strict.
pub fn spans_equivalent(mode: MatchMode, a: &TextSpan, b: &TextSpan) -> bool {
    match mode {
        MatchMode::Overlap => spans_overlap(a, b),
        MatchMode::Strict => a == b,
    }
}

/// A trigger occurrence extracted from one document, self-contained for
/// comparison purposes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerInstance {
    /// Id of the owning event within its document.
    pub event_id: String,
    pub event_type: String,
    pub span: TextSpan,
}

/// An argument occurrence: the owning event, the role, the argument span,
/// and the subtype values the role carries (empty for span-only roles).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgumentInstance {
    pub event_id: String,
    pub event_type: String,
    pub role: String,
    pub span: TextSpan,
    pub subtypes: BTreeMap<String, String>,
}

/// The set of (ref event id, pred event id) pairs produced by trigger
/// alignment; argument equivalence consults it.
#[derive(Debug, Clone, Default)]
pub struct TriggerPairing {
    pairs: BTreeSet<(String, String)>,
}

impl TriggerPairing {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        TriggerPairing {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn contains(&self, ref_event: &str, pred_event: &str) -> bool {
        self.pairs
            .contains(&(ref_event.to_owned(), pred_event.to_owned()))
    }

    pub fn insert(&mut self, ref_event: String, pred_event: String) {
        self.pairs.insert((ref_event, pred_event));
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Triggers are equivalent iff the event types are identical and the spans
/// are equivalent under the mode.
pub fn triggers_equivalent(mode: MatchMode, a: &TriggerInstance, b: &TriggerInstance) -> bool {
    a.event_type == b.event_type && spans_equivalent(mode, &a.span, &b.span)
}

/// Arguments are equivalent iff the roles match, the spans are equivalent
/// under the mode, the owning trigger pair was matched, and every subtype
/// value agrees (for anatomy that means both parent and child). A subtype
/// present on one side but absent on the other counts as a mismatch.
pub fn arguments_equivalent(
    mode: MatchMode,
    reference: &ArgumentInstance,
    predicted: &ArgumentInstance,
    trigger_pairing: &TriggerPairing,
) -> bool {
    reference.event_type == predicted.event_type
        && reference.role == predicted.role
        && spans_equivalent(mode, &reference.span, &predicted.span)
        && trigger_pairing.contains(&reference.event_id, &predicted.event_id)
        && reference.subtypes == predicted.subtypes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(fragments: &[(usize, usize)]) -> TextSpan {
        TextSpan::new(fragments.to_vec()).unwrap()
    }

    fn trigger(event_id: &str, event_type: &str, fragments: &[(usize, usize)]) -> TriggerInstance {
        TriggerInstance {
            event_id: event_id.to_owned(),
            event_type: event_type.to_owned(),
            span: span(fragments),
        }
    }

    #[test]
    fn partial_overlap_counts_as_equivalent() {
        // "right pedicle" inside "T12 right pedicle".
        assert!(spans_overlap(&span(&[(34, 47)]), &span(&[(30, 47)])));
    }

    #[test]
    fn half_open_adjacency_is_not_overlap() {
        assert!(!spans_overlap(&span(&[(0, 5)]), &span(&[(5, 9)])));
    }

    #[test]
    fn discontinuous_overlap_checks_every_fragment() {
        let a = span(&[(0, 3), (10, 14)]);
        assert!(!spans_overlap(&a, &span(&[(4, 9)])));
        assert!(spans_overlap(&a, &span(&[(12, 20)])));
    }

    #[test]
    fn overlap_is_symmetric_and_reflexive() {
        let a = span(&[(2, 8)]);
        let b = span(&[(5, 11)]);
        assert!(spans_overlap(&a, &a));
        assert_eq!(spans_overlap(&a, &b), spans_overlap(&b, &a));
    }

    #[test]
    fn trigger_equivalence_by_mode() {
        // "hypodense lesions" vs its suffix "lesions".
        let reference = trigger("E1", "Lesion", &[(10, 27)]);
        let predicted = trigger("E1", "Lesion", &[(20, 27)]);
        assert!(triggers_equivalent(
            MatchMode::Overlap,
            &reference,
            &predicted
        ));
        assert!(!triggers_equivalent(
            MatchMode::Strict,
            &reference,
            &predicted
        ));
    }

    #[test]
    fn trigger_types_must_match_in_both_modes() {
        let a = trigger("E1", "Lesion", &[(0, 7)]);
        let b = trigger("E1", "Medical Problem", &[(0, 7)]);
        assert!(!triggers_equivalent(MatchMode::Overlap, &a, &b));
        assert!(!triggers_equivalent(MatchMode::Strict, &a, &b));
    }

    #[test]
    fn identical_triggers_equivalent_in_both_modes() {
        let a = trigger("E1", "Lesion", &[(0, 7)]);
        assert!(triggers_equivalent(MatchMode::Overlap, &a, &a));
        assert!(triggers_equivalent(MatchMode::Strict, &a, &a));
    }

    fn assertion_arg(
        event_id: &str,
        fragments: &[(usize, usize)],
        value: &str,
    ) -> ArgumentInstance {
        ArgumentInstance {
            event_id: event_id.to_owned(),
            event_type: "Lesion".to_owned(),
            role: "Assertion".to_owned(),
            span: span(fragments),
            subtypes: BTreeMap::from([("Assertion".to_owned(), value.to_owned())]),
        }
    }

    #[test]
    fn matched_triggers_and_equal_values_make_arguments_equivalent() {
        let pairing = TriggerPairing::new([("E1".to_owned(), "E7".to_owned())]);
        let reference = assertion_arg("E1", &[(0, 4)], "present");
        let predicted = assertion_arg("E7", &[(2, 6)], "present");
        assert!(arguments_equivalent(
            MatchMode::Overlap,
            &reference,
            &predicted,
            &pairing
        ));
    }

    #[test]
    fn subtype_value_mismatch_blocks_equivalence() {
        let pairing = TriggerPairing::new([("E1".to_owned(), "E7".to_owned())]);
        let reference = assertion_arg("E1", &[(0, 4)], "present");
        let predicted = assertion_arg("E7", &[(0, 4)], "possible");
        assert!(!arguments_equivalent(
            MatchMode::Overlap,
            &reference,
            &predicted,
            &pairing
        ));
    }

    #[test]
    fn unmatched_trigger_pair_blocks_equivalence() {
        let pairing = TriggerPairing::new([("E1".to_owned(), "E8".to_owned())]);
        let reference = assertion_arg("E1", &[(0, 4)], "present");
        let predicted = assertion_arg("E7", &[(0, 4)], "present");
        assert!(!arguments_equivalent(
            MatchMode::Overlap,
            &reference,
            &predicted,
            &pairing
        ));
    }

    #[test]
    fn missing_subtype_on_one_side_is_a_mismatch() {
        let pairing = TriggerPairing::new([("E1".to_owned(), "E7".to_owned())]);
        let reference = assertion_arg("E1", &[(0, 4)], "present");
        let mut predicted = assertion_arg("E7", &[(0, 4)], "present");
        predicted.subtypes.clear();
        assert!(!arguments_equivalent(
            MatchMode::Overlap,
            &reference,
            &predicted,
            &pairing
        ));
    }

    #[test]
    fn anatomy_requires_parent_and_child_agreement() {
        let pairing = TriggerPairing::new([("E1".to_owned(), "E7".to_owned())]);
        let mk = |event_id: &str, parent: &str, child: &str| ArgumentInstance {
            event_id: event_id.to_owned(),
            event_type: "Lesion".to_owned(),
            role: "Anatomy".to_owned(),
            span: span(&[(0, 9)]),
            subtypes: BTreeMap::from([
                ("Anatomy Parent".to_owned(), parent.to_owned()),
                ("Anatomy Child".to_owned(), child.to_owned()),
            ]),
        };
        let reference = mk("E1", "Respiratory", "Lung");
        assert!(arguments_equivalent(
            MatchMode::Overlap,
            &reference,
            &mk("E7", "Respiratory", "Lung"),
            &pairing
        ));
        assert!(!arguments_equivalent(
            MatchMode::Overlap,
            &reference,
            &mk("E7", "Respiratory", "Pleura"),
            &pairing
        ));
        assert!(!arguments_equivalent(
            MatchMode::Overlap,
            &reference,
            &mk("E7", "Urinary", "Lung"),
            &pairing
        ));
    }

    #[test]
    fn strict_implies_overlap_for_triggers() {
        let cases = [
            (
                trigger("E1", "Lesion", &[(0, 7)]),
                trigger("E2", "Lesion", &[(0, 7)]),
            ),
            (
                trigger("E1", "Lesion", &[(0, 7)]),
                trigger("E2", "Lesion", &[(3, 9)]),
            ),
            (
                trigger("E1", "Lesion", &[(0, 7)]),
                trigger("E2", "Medical Problem", &[(0, 7)]),
            ),
        ];
        for (a, b) in &cases {
            if triggers_equivalent(MatchMode::Strict, a, b) {
                assert!(triggers_equivalent(MatchMode::Overlap, a, b));
            }
        }
    }
}
