//! Precision/recall/F1 scoring over aligned annotation corpora, with a
//! span-error breakdown for matched-but-inexact predictions.
//!
//! Categories are keyed by (event type, role), with the pseudo-role
//! [`TRIGGER_ROLE`] denoting the event type's trigger row, so Lesion/Anatomy
//! and Medical Problem/Anatomy score separately. The overall row pools
//! TP/FP/FN across all categories (micro-averaging) before computing ratios.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::alignment::{align, AlignItem, Matching};
use crate::equivalence::{
    arguments_equivalent, triggers_equivalent, ArgumentInstance, MatchMode, TriggerInstance,
    TriggerPairing,
};
use crate::schema::{validate_corpus, Schema, Violation};
use crate::standoff::{Document, Entity, TextSpan};

/// Pseudo-role naming the trigger row of each event type's category block.
pub const TRIGGER_ROLE: &str = "TRIGGER";

/// Scoring category: one event type's trigger row or one of its argument
/// rows. Renders as `EventType/Role`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryKey {
    pub event_type: String,
    pub role: String,
}

impl CategoryKey {
    pub fn trigger(event_type: impl Into<String>) -> Self {
        CategoryKey {
            event_type: event_type.into(),
            role: TRIGGER_ROLE.to_owned(),
        }
    }

    pub fn argument(event_type: impl Into<String>, role: impl Into<String>) -> Self {
        CategoryKey {
            event_type: event_type.into(),
            role: role.into(),
        }
    }

    pub fn is_trigger(&self) -> bool {
        self.role == TRIGGER_ROLE
    }
}

impl fmt::Display for CategoryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.event_type, self.role)
    }
}

impl std::str::FromStr for CategoryKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (event_type, role) = s
            .split_once('/')
            .ok_or_else(|| format!("expected 'EventType/Role', got '{s}'"))?;
        if event_type.is_empty() || role.is_empty() {
            return Err(format!("expected 'EventType/Role', got '{s}'"));
        }
        Ok(CategoryKey {
            event_type: event_type.to_owned(),
            role: role.to_owned(),
        })
    }
}

impl Ord for CategoryKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Within an event type the trigger row sorts before argument rows.
        (&self.event_type, !self.is_trigger(), &self.role).cmp(&(
            &other.event_type,
            !other.is_trigger(),
            &other.role,
        ))
    }
}

impl PartialOrd for CategoryKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for CategoryKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CategoryKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(D::Error::custom)
    }
}

/// Counts and derived ratios for one category.
///
/// Degenerate denominators follow the usual scorer conventions: precision is
/// 1.0 when nothing was predicted (`tp+fp == 0`), recall is 1.0 when nothing
/// was referenced (`tp+fn == 0`), and a category with no annotations on
/// either side reports 1.0 across the board with `vacuous` set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub vacuous: bool,
}

/// Computes metrics from raw counts per the conventions on [`Metrics`].
pub fn prf(tp: u64, fp: u64, fn_: u64) -> Metrics {
    let vacuous = tp == 0 && fp == 0 && fn_ == 0;
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        1.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        1.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        tp,
        fp,
        fn_,
        precision,
        recall,
        f1,
        vacuous,
    }
}

/// Classification of matched span pairs plus the unmatched residue.
/// `exact + pred_shorter + pred_longer + pred_other_overlap` equals the
/// matched-pair count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub exact: u64,
    pub pred_shorter: u64,
    pub pred_longer: u64,
    pub pred_other_overlap: u64,
    pub spurious: u64,
    pub missing: u64,
}

impl ErrorBreakdown {
    fn absorb(&mut self, other: &ErrorBreakdown) {
        self.exact += other.exact;
        self.pred_shorter += other.pred_shorter;
        self.pred_longer += other.pred_longer;
        self.pred_other_overlap += other.pred_other_overlap;
        self.spurious += other.spurious;
        self.missing += other.missing;
    }
}

/// Classifies each matched pair of a [`Matching`] by span containment:
/// identical fragment lists are `exact`; a predicted character set strictly
/// inside the reference's is `pred_shorter`; the converse is `pred_longer`;
/// any other overlap is `pred_other_overlap`. Unmatched predictions count as
/// `spurious`, unmatched references as `missing`.
pub fn categorize_span_errors(
    matching: &Matching,
    refs: &[AlignItem],
    preds: &[AlignItem],
) -> ErrorBreakdown {
    let ref_spans: HashMap<&str, &TextSpan> = refs
        .iter()
        .map(|item| (item.id.as_str(), item.span))
        .collect();
    let pred_spans: HashMap<&str, &TextSpan> = preds
        .iter()
        .map(|item| (item.id.as_str(), item.span))
        .collect();
    let mut breakdown = ErrorBreakdown {
        spurious: matching.unmatched_pred.len() as u64,
        missing: matching.unmatched_ref.len() as u64,
        ..ErrorBreakdown::default()
    };
    for (ref_id, pred_id) in &matching.pairs {
        let ref_span = ref_spans[ref_id.as_str()];
        let pred_span = pred_spans[pred_id.as_str()];
        if ref_span == pred_span {
            breakdown.exact += 1;
        } else if ref_span.covers(pred_span) && pred_span.char_len() < ref_span.char_len() {
            breakdown.pred_shorter += 1;
        } else if pred_span.covers(ref_span) && ref_span.char_len() < pred_span.char_len() {
            breakdown.pred_longer += 1;
        } else {
            breakdown.pred_other_overlap += 1;
        }
    }
    breakdown
}

/// Full scoring output: one row per category, a micro-averaged overall row,
/// and per-category span-error breakdowns.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub mode: MatchMode,
    pub rows: BTreeMap<CategoryKey, Metrics>,
    pub overall: Metrics,
    pub errors: BTreeMap<CategoryKey, ErrorBreakdown>,
    pub doc_count: usize,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("document id sets differ: missing from predictions: {missing_in_pred:?}; missing from references: {missing_in_ref:?}")]
    PairingMismatch {
        missing_in_pred: Vec<String>,
        missing_in_ref: Vec<String>,
    },
    #[error("duplicate document id '{0}' within one corpus")]
    DuplicateDocId(String),
    #[error("{} schema violation(s); first: {}", violations.len(), violations[0].message)]
    Validation { violations: Vec<Violation> },
}

/// Raw per-category counts of one scored document pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

pub(crate) struct DocOutcome {
    pub counts: BTreeMap<CategoryKey, Counts>,
    pub errors: BTreeMap<CategoryKey, ErrorBreakdown>,
}

struct DocView<'a> {
    doc: &'a Document,
    entities: HashMap<&'a str, &'a Entity>,
}

impl<'a> DocView<'a> {
    fn new(doc: &'a Document) -> Self {
        DocView {
            doc,
            entities: doc.entities.iter().map(|e| (e.id.as_str(), e)).collect(),
        }
    }

    fn triggers_of_type(&self, event_type: &str) -> Vec<TriggerInstance> {
        self.doc
            .events
            .iter()
            .filter(|event| event.event_type == event_type)
            .filter_map(|event| {
                self.entities
                    .get(event.trigger.as_str())
                    .map(|trigger| TriggerInstance {
                        event_id: event.id.clone(),
                        event_type: event.event_type.clone(),
                        span: trigger.span.clone(),
                    })
            })
            .collect()
    }

    fn arguments_of(
        &self,
        event_type: &str,
        role_slots: &[&str],
        role: &str,
    ) -> Vec<(String, ArgumentInstance)> {
        let mut out = Vec::new();
        for event in &self.doc.events {
            if event.event_type != event_type {
                continue;
            }
            for (idx, arg) in event.arguments.iter().enumerate() {
                if arg.role != role {
                    continue;
                }
                let Some(target) = self.entities.get(arg.target.as_str()) else {
                    continue;
                };
                let subtypes: BTreeMap<String, String> = role_slots
                    .iter()
                    .filter_map(|slot| {
                        event
                            .attributes
                            .get(*slot)
                            .map(|value| (slot.to_string(), value.clone()))
                    })
                    .collect();
                // Synthesized alignment id, unique within the document side.
                let align_id = format!("{}:{}", event.id, idx);
                out.push((
                    align_id,
                    ArgumentInstance {
                        event_id: event.id.clone(),
                        event_type: event.event_type.clone(),
                        role: arg.role.clone(),
                        span: target.span.clone(),
                        subtypes,
                    },
                ));
            }
        }
        out
    }
}

/// Aligns and counts one document pair across every schema category.
/// Triggers are aligned first, per event type; the resulting event pairing
/// then gates argument equivalence, mirroring the "connected triggers must be
/// equivalent" rule.
pub(crate) fn score_document_pair(
    ref_doc: &Document,
    pred_doc: &Document,
    schema: &Schema,
    mode: MatchMode,
) -> DocOutcome {
    let ref_view = DocView::new(ref_doc);
    let pred_view = DocView::new(pred_doc);
    let mut counts = BTreeMap::new();
    let mut errors = BTreeMap::new();
    let mut pairing = TriggerPairing::default();

    for type_def in schema.event_types() {
        let ref_triggers = ref_view.triggers_of_type(&type_def.name);
        let pred_triggers = pred_view.triggers_of_type(&type_def.name);
        let ref_items: Vec<AlignItem> = ref_triggers
            .iter()
            .map(|t| AlignItem::new(t.event_id.clone(), &t.span))
            .collect();
        let pred_items: Vec<AlignItem> = pred_triggers
            .iter()
            .map(|t| AlignItem::new(t.event_id.clone(), &t.span))
            .collect();
        let matching = align(&ref_items, &pred_items, |i, j| {
            triggers_equivalent(mode, &ref_triggers[i], &pred_triggers[j])
        });
        let key = CategoryKey::trigger(&type_def.name);
        counts.insert(
            key.clone(),
            Counts {
                tp: matching.pairs.len() as u64,
                fp: matching.unmatched_pred.len() as u64,
                fn_: matching.unmatched_ref.len() as u64,
            },
        );
        errors.insert(
            key,
            categorize_span_errors(&matching, &ref_items, &pred_items),
        );
        for (ref_event, pred_event) in matching.pairs {
            pairing.insert(ref_event, pred_event);
        }
    }

    for type_def in schema.event_types() {
        for role_def in &type_def.roles {
            let slots = role_def.subtype_slots();
            let ref_args = ref_view.arguments_of(&type_def.name, &slots, &role_def.name);
            let pred_args = pred_view.arguments_of(&type_def.name, &slots, &role_def.name);
            let ref_items: Vec<AlignItem> = ref_args
                .iter()
                .map(|(id, a)| AlignItem::new(id.clone(), &a.span))
                .collect();
            let pred_items: Vec<AlignItem> = pred_args
                .iter()
                .map(|(id, a)| AlignItem::new(id.clone(), &a.span))
                .collect();
            let matching = align(&ref_items, &pred_items, |i, j| {
                arguments_equivalent(mode, &ref_args[i].1, &pred_args[j].1, &pairing)
            });
            let key = CategoryKey::argument(&type_def.name, &role_def.name);
            counts.insert(
                key.clone(),
                Counts {
                    tp: matching.pairs.len() as u64,
                    fp: matching.unmatched_pred.len() as u64,
                    fn_: matching.unmatched_ref.len() as u64,
                },
            );
            errors.insert(
                key,
                categorize_span_errors(&matching, &ref_items, &pred_items),
            );
        }
    }

    DocOutcome { counts, errors }
}

/// The full category grid for a schema, in report order.
pub fn category_grid(schema: &Schema) -> Vec<CategoryKey> {
    let mut grid = Vec::new();
    for type_def in schema.event_types() {
        grid.push(CategoryKey::trigger(&type_def.name));
        for role_def in &type_def.roles {
            grid.push(CategoryKey::argument(&type_def.name, &role_def.name));
        }
    }
    grid
}

/// Pairs documents by id, refuses invalid input, aligns each pair, and sums
/// counts into per-category and micro-averaged overall metrics.
pub fn score_corpus(
    refs: &[Document],
    preds: &[Document],
    schema: &Schema,
    mode: MatchMode,
) -> Result<ScoreReport, ScoreError> {
    let index = |docs: &'_ [Document]| -> Result<BTreeMap<String, usize>, ScoreError> {
        let mut map = BTreeMap::new();
        for (i, doc) in docs.iter().enumerate() {
            if map.insert(doc.id.clone(), i).is_some() {
                return Err(ScoreError::DuplicateDocId(doc.id.clone()));
            }
        }
        Ok(map)
    };
    let ref_index = index(refs)?;
    let pred_index = index(preds)?;
    let missing_in_pred: Vec<String> = ref_index
        .keys()
        .filter(|id| !pred_index.contains_key(*id))
        .cloned()
        .collect();
    let missing_in_ref: Vec<String> = pred_index
        .keys()
        .filter(|id| !ref_index.contains_key(*id))
        .cloned()
        .collect();
    if !missing_in_pred.is_empty() || !missing_in_ref.is_empty() {
        return Err(ScoreError::PairingMismatch {
            missing_in_pred,
            missing_in_ref,
        });
    }

    let mut violations = validate_corpus(schema, refs);
    violations.extend(validate_corpus(schema, preds));
    if !violations.is_empty() {
        violations.sort();
        violations.dedup();
        return Err(ScoreError::Validation { violations });
    }

    let mut totals: BTreeMap<CategoryKey, Counts> = category_grid(schema)
        .into_iter()
        .map(|key| (key, Counts::default()))
        .collect();
    let mut errors: BTreeMap<CategoryKey, ErrorBreakdown> = totals
        .keys()
        .cloned()
        .map(|key| (key, ErrorBreakdown::default()))
        .collect();
    for (doc_id, &ref_i) in &ref_index {
        let outcome = score_document_pair(&refs[ref_i], &preds[pred_index[doc_id]], schema, mode);
        for (key, c) in outcome.counts {
            let slot = totals.entry(key).or_default();
            slot.tp += c.tp;
            slot.fp += c.fp;
            slot.fn_ += c.fn_;
        }
        for (key, e) in outcome.errors {
            errors.entry(key).or_default().absorb(&e);
        }
    }

    let mut overall = Counts::default();
    for c in totals.values() {
        overall.tp += c.tp;
        overall.fp += c.fp;
        overall.fn_ += c.fn_;
    }
    let rows = totals
        .into_iter()
        .map(|(key, c)| (key, prf(c.tp, c.fp, c.fn_)))
        .collect();
    Ok(ScoreReport {
        mode,
        rows,
        overall: prf(overall.tp, overall.fp, overall.fn_),
        errors,
        doc_count: refs.len(),
    })
}

impl ScoreReport {
    /// Aligned plain-text table: one block per event type with the trigger
    /// row first, then the overall row. Vacuous rows are marked with `*`.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "mode: {}    documents: {}\n",
            self.mode, self.doc_count
        ));
        out.push_str(&format!(
            "{:<34} {:>6} {:>6} {:>6} {:>10} {:>8} {:>8}\n",
            "category", "tp", "fp", "fn", "precision", "recall", "f1"
        ));
        let rule = format!("{:-<84}\n", "");
        out.push_str(&rule);
        let mut current_type: Option<&str> = None;
        for (key, m) in &self.rows {
            if current_type != Some(key.event_type.as_str()) {
                if current_type.is_some() {
                    out.push_str(&rule);
                }
                current_type = Some(key.event_type.as_str());
            }
            out.push_str(&render_row(&key.to_string(), m));
        }
        out.push_str(&rule);
        out.push_str(&render_row("overall (micro)", &self.overall));
        if self.rows.values().any(|m| m.vacuous) {
            out.push_str("* vacuous category: no annotations on either side; reported as 1.0\n");
        }
        out
    }

    /// Aligned plain-text table of the span-error breakdown.
    pub fn render_error_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<34} {:>6} {:>8} {:>7} {:>8} {:>9} {:>8}\n",
            "category", "exact", "shorter", "longer", "straddle", "spurious", "missing"
        ));
        out.push_str(&format!("{:-<84}\n", ""));
        let mut total = ErrorBreakdown::default();
        for (key, e) in &self.errors {
            total.absorb(e);
            out.push_str(&format!(
                "{:<34} {:>6} {:>8} {:>7} {:>8} {:>9} {:>8}\n",
                key.to_string(),
                e.exact,
                e.pred_shorter,
                e.pred_longer,
                e.pred_other_overlap,
                e.spurious,
                e.missing
            ));
        }
        out.push_str(&format!("{:-<84}\n", ""));
        out.push_str(&format!(
            "{:<34} {:>6} {:>8} {:>7} {:>8} {:>9} {:>8}\n",
            "total",
            total.exact,
            total.pred_shorter,
            total.pred_longer,
            total.pred_other_overlap,
            total.spurious,
            total.missing
        ));
        out
    }
}

fn render_row(label: &str, m: &Metrics) -> String {
    format!(
        "{:<34} {:>6} {:>6} {:>6} {:>10.3} {:>8.3} {:>8.3}{}\n",
        label,
        m.tp,
        m.fp,
        m.fn_,
        m.precision,
        m.recall,
        m.f1,
        if m.vacuous { " *" } else { "" }
    )
}
