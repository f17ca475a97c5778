//! Corpus distribution reporting and deterministic split manifests.
//!
//! The summary mirrors the usual corpus-table shape: per group (whole corpus,
//! per modality, or per split), annotation counts per category, per-report
//! trigger means with population standard deviation, and subtype-value
//! histograms.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::schema::Schema;
use crate::scoring::{category_grid, CategoryKey};
use crate::standoff::{Document, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    All,
    Modality,
    Split,
}

impl std::str::FromStr for Grouping {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Grouping::All),
            "modality" => Ok(Grouping::Modality),
            "split" => Ok(Grouping::Split),
            other => Err(format!(
                "unknown grouping '{other}' (expected all|modality|split)"
            )),
        }
    }
}

/// Mean and population standard deviation of a per-report count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: &[u64]) -> MeanStd {
    if values.is_empty() {
        return MeanStd {
            mean: 0.0,
            std: 0.0,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<u64>() as f64 / n;
    let var = values
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    MeanStd {
        mean,
        std: var.sqrt(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupStats {
    pub doc_count: usize,
    /// Annotation count per category (triggers and arguments).
    pub category_counts: BTreeMap<CategoryKey, u64>,
    /// Per-report trigger count mean ± population std, per event type.
    pub trigger_stats: BTreeMap<String, MeanStd>,
    /// Attribute name → value → occurrence count.
    pub subtype_histograms: BTreeMap<String, BTreeMap<String, u64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub grouping: Grouping,
    pub groups: BTreeMap<String, GroupStats>,
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("{0}")]
    Parameter(String),
}

/// Group tag for documents lacking the grouped metadata field.
pub const UNTAGGED: &str = "untagged";

fn group_key(doc: &Document, grouping: Grouping) -> String {
    match grouping {
        Grouping::All => "all".to_owned(),
        Grouping::Modality => doc
            .metadata
            .modality
            .map(|m| m.to_string())
            .unwrap_or_else(|| UNTAGGED.to_owned()),
        Grouping::Split => doc
            .metadata
            .split
            .map(|s| s.to_string())
            .unwrap_or_else(|| UNTAGGED.to_owned()),
    }
}

/// Counts annotations per category and group. Counts are purely descriptive:
/// event types or roles outside the schema still get counted under their own
/// keys, so the table always reconciles with the raw files.
pub fn corpus_summary(docs: &[Document], schema: &Schema, grouping: Grouping) -> StatsReport {
    let mut buckets: BTreeMap<String, Vec<&Document>> = BTreeMap::new();
    for doc in docs {
        buckets
            .entry(group_key(doc, grouping))
            .or_default()
            .push(doc);
    }

    let grid = category_grid(schema);
    let schema_types: Vec<&str> = schema
        .event_types()
        .iter()
        .map(|t| t.name.as_str())
        .collect();
    let mut groups = BTreeMap::new();
    for (key, group_docs) in buckets {
        let mut category_counts: BTreeMap<CategoryKey, u64> =
            grid.iter().cloned().map(|k| (k, 0)).collect();
        let mut trigger_counts: BTreeMap<String, Vec<u64>> = schema_types
            .iter()
            .map(|&t| (t.to_owned(), Vec::new()))
            .collect();
        let mut subtype_histograms: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        for (docs_seen, doc) in group_docs.iter().enumerate() {
            let mut per_doc_triggers: BTreeMap<&str, u64> = BTreeMap::new();
            for event in &doc.events {
                *category_counts
                    .entry(CategoryKey::trigger(&event.event_type))
                    .or_insert(0) += 1;
                *per_doc_triggers
                    .entry(event.event_type.as_str())
                    .or_insert(0) += 1;
                for arg in &event.arguments {
                    *category_counts
                        .entry(CategoryKey::argument(&event.event_type, &arg.role))
                        .or_insert(0) += 1;
                }
                for (name, value) in &event.attributes {
                    *subtype_histograms
                        .entry(name.clone())
                        .or_default()
                        .entry(value.clone())
                        .or_insert(0) += 1;
                }
            }
            for (event_type, observations) in trigger_counts.iter_mut() {
                observations.push(
                    per_doc_triggers
                        .get(event_type.as_str())
                        .copied()
                        .unwrap_or(0),
                );
            }
            for (event_type, observed) in per_doc_triggers {
                if !trigger_counts.contains_key(event_type) {
                    // Event type outside the schema: pad the docs processed
                    // before it first appeared with zeros so its mean is
                    // still per report.
                    let mut observations = vec![0; docs_seen];
                    observations.push(observed);
                    trigger_counts.insert(event_type.to_owned(), observations);
                }
            }
        }
        // Trailing docs without an off-schema type also contribute zeros.
        for observations in trigger_counts.values_mut() {
            observations.resize(group_docs.len(), 0);
        }
        let trigger_stats = trigger_counts
            .iter()
            .map(|(event_type, observations)| (event_type.clone(), mean_std(observations)))
            .collect();
        groups.insert(
            key,
            GroupStats {
                doc_count: group_docs.len(),
                category_counts,
                trigger_stats,
                subtype_histograms,
            },
        );
    }
    StatsReport { grouping, groups }
}

/// Assignment of every document id to a split, with the ratios that produced
/// it.
#[derive(Debug, Clone, Serialize)]
pub struct SplitManifest {
    pub assignments: BTreeMap<String, Split>,
    pub ratios: (f64, f64, f64),
}

impl SplitManifest {
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for split in self.assignments.values() {
            match split {
                Split::Train => counts.0 += 1,
                Split::Validation => counts.1 += 1,
                Split::Test => counts.2 += 1,
            }
        }
        counts
    }
}

/// Largest-remainder split sizes for `n` items: floor the exact shares, then
/// hand the leftover items to the largest fractional remainders (ties resolved
/// train, then validation, then test).
pub fn split_sizes(n: usize, ratios: (f64, f64, f64)) -> (usize, usize, usize) {
    let shares = [ratios.0, ratios.1, ratios.2];
    let exact: Vec<f64> = shares.iter().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|&e| e.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = vec![0, 1, 2];
    order.sort_by(|&a, &b| {
        let frac_a = exact[a] - exact[a].floor();
        let frac_b = exact[b] - exact[b].floor();
        frac_b.partial_cmp(&frac_a).unwrap().then(a.cmp(&b))
    });
    for i in 0..(n - assigned) {
        sizes[order[i % 3]] += 1;
    }
    (sizes[0], sizes[1], sizes[2])
}

/// Deterministically shuffles the ids with a seeded generator and assigns
/// them to train/validation/test at the largest-remainder sizes.
pub fn make_splits(
    doc_ids: &[String],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitManifest, StatsError> {
    if doc_ids.is_empty() {
        return Err(StatsError::Parameter("no document ids to split".to_owned()));
    }
    if ratios.0 <= 0.0 || ratios.1 <= 0.0 || ratios.2 <= 0.0 {
        return Err(StatsError::Parameter(
            "split ratios must be positive".to_owned(),
        ));
    }
    if (ratios.0 + ratios.1 + ratios.2 - 1.0).abs() > 1e-9 {
        return Err(StatsError::Parameter(format!(
            "split ratios must sum to 1.0, got {}",
            ratios.0 + ratios.1 + ratios.2
        )));
    }
    let mut sorted = doc_ids.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != doc_ids.len() {
        return Err(StatsError::Parameter("duplicate document ids".to_owned()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    let (train_n, val_n, _) = split_sizes(sorted.len(), ratios);
    let mut assignments = BTreeMap::new();
    for (i, id) in sorted.into_iter().enumerate() {
        let split = if i < train_n {
            Split::Train
        } else if i < train_n + val_n {
            Split::Validation
        } else {
            Split::Test
        };
        assignments.insert(id, split);
    }
    Ok(SplitManifest {
        assignments,
        ratios,
    })
}

impl StatsReport {
    /// Aligned plain-text table: documents and category counts as rows, one
    /// column per group; trigger rows carry the per-report mean ± std in
    /// parentheses.
    pub fn render_table(&self) -> String {
        let group_names: Vec<&String> = self.groups.keys().collect();
        let mut categories: Vec<&CategoryKey> = self
            .groups
            .values()
            .flat_map(|g| g.category_counts.keys())
            .collect();
        categories.sort();
        categories.dedup();

        let mut out = String::new();
        out.push_str(&format!("{:<34}", "group"));
        for name in &group_names {
            out.push_str(&format!(" {name:>22}"));
        }
        out.push('\n');
        out.push_str(&format!("{:-<1$}\n", "", 34 + 23 * group_names.len()));
        out.push_str(&format!("{:<34}", "documents"));
        for name in &group_names {
            out.push_str(&format!(" {:>22}", self.groups[*name].doc_count));
        }
        out.push('\n');
        for key in categories {
            out.push_str(&format!("{:<34}", key.to_string()));
            for name in &group_names {
                let group = &self.groups[*name];
                let count = group.category_counts.get(key).copied().unwrap_or(0);
                let cell = if key.is_trigger() {
                    match group.trigger_stats.get(&key.event_type) {
                        Some(stats) => format!("{count} ({:.2}±{:.2})", stats.mean, stats.std),
                        None => count.to_string(),
                    }
                } else {
                    count.to_string()
                };
                out.push_str(&format!(" {cell:>22}"));
            }
            out.push('\n');
        }
        let attr_names: Vec<&String> = {
            let mut names: Vec<&String> = self
                .groups
                .values()
                .flat_map(|g| g.subtype_histograms.keys())
                .collect();
            names.sort();
            names.dedup();
            names
        };
        if !attr_names.is_empty() {
            out.push_str(&format!("{:-<1$}\n", "", 34 + 23 * group_names.len()));
            for attr in attr_names {
                let mut values: Vec<&String> = self
                    .groups
                    .values()
                    .flat_map(|g| g.subtype_histograms.get(attr).map(|h| h.keys()))
                    .flatten()
                    .collect();
                values.sort();
                values.dedup();
                for value in values {
                    out.push_str(&format!("{:<34}", format!("{attr} = {value}")));
                    for name in &group_names {
                        let count = self.groups[*name]
                            .subtype_histograms
                            .get(attr)
                            .and_then(|h| h.get(value))
                            .copied()
                            .unwrap_or(0);
                        out.push_str(&format!(" {count:>22}"));
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::standoff::{parse_document, Modality};

    fn indication_doc(id: &str, n_triggers: usize) -> Document {
        let mut text = String::new();
        let mut ann = String::new();
        for i in 0..n_triggers {
            let start = text.chars().count();
            text.push_str("cancer. ");
            ann.push_str(&format!(
                "T{}\tIndication {} {}\tcancer\n",
                i + 1,
                start,
                start + 6
            ));
            ann.push_str(&format!("E{}\tIndication:T{}\n", i + 1, i + 1));
        }
        parse_document(&text, &ann, id).unwrap()
    }

    #[test]
    fn two_value_mean_std_example() {
        let docs = vec![indication_doc("d1", 2), indication_doc("d2", 3)];
        let schema = Schema::builtin();
        let report = corpus_summary(&docs, &schema, Grouping::All);
        let stats = &report.groups["all"].trigger_stats["Indication"];
        assert_eq!(stats.mean, 2.5);
        assert_eq!(stats.std, 0.5);
        assert_eq!(
            report.groups["all"].category_counts[&CategoryKey::trigger("Indication")],
            5
        );
    }

    #[test]
    fn single_empty_document_is_all_zero() {
        let docs = vec![parse_document("Nothing.", "", "d1").unwrap()];
        let schema = Schema::builtin();
        let report = corpus_summary(&docs, &schema, Grouping::All);
        let group = &report.groups["all"];
        assert_eq!(group.doc_count, 1);
        assert!(group.category_counts.values().all(|&c| c == 0));
        for stats in group.trigger_stats.values() {
            assert_eq!((stats.mean, stats.std), (0.0, 0.0));
        }
    }

    #[test]
    fn group_counts_sum_to_ungrouped_totals() {
        let mut d1 = indication_doc("d1", 2);
        d1.metadata.modality = Some(Modality::Ct);
        let mut d2 = indication_doc("d2", 3);
        d2.metadata.modality = Some(Modality::Mri);
        let d3 = indication_doc("d3", 1); // untagged
        let docs = vec![d1, d2, d3];
        let schema = Schema::builtin();
        let all = corpus_summary(&docs, &schema, Grouping::All);
        let by_modality = corpus_summary(&docs, &schema, Grouping::Modality);
        let key = CategoryKey::trigger("Indication");
        let total: u64 = by_modality
            .groups
            .values()
            .map(|g| g.category_counts[&key])
            .sum();
        assert_eq!(total, all.groups["all"].category_counts[&key]);
        assert!(by_modality.groups.contains_key(UNTAGGED));
    }

    #[test]
    fn ten_ids_split_seven_one_two() {
        let ids: Vec<String> = (0..10).map(|i| format!("doc{i}")).collect();
        let manifest = make_splits(&ids, (0.7, 0.1, 0.2), 99).unwrap();
        assert_eq!(manifest.counts(), (7, 1, 2));
        assert_eq!(manifest.assignments.len(), 10);
    }

    #[test]
    fn largest_remainder_on_609_ids() {
        assert_eq!(split_sizes(609, (0.7, 0.1, 0.2)), (426, 61, 122));
    }

    #[test]
    fn splits_are_deterministic() {
        let ids: Vec<String> = (0..37).map(|i| format!("doc{i}")).collect();
        let a = make_splits(&ids, (0.7, 0.1, 0.2), 42).unwrap();
        let b = make_splits(&ids, (0.7, 0.1, 0.2), 42).unwrap();
        assert_eq!(a.assignments, b.assignments);
        // Input order must not matter either.
        let mut reversed = ids.clone();
        reversed.reverse();
        let c = make_splits(&reversed, (0.7, 0.1, 0.2), 42).unwrap();
        assert_eq!(a.assignments, c.assignments);
    }

    #[test]
    fn bad_ratios_are_rejected() {
        let ids = vec!["a".to_owned()];
        assert!(make_splits(&ids, (0.7, 0.1, 0.1), 1).is_err());
        assert!(make_splits(&ids, (0.0, 0.5, 0.5), 1).is_err());
        assert!(make_splits(&[], (0.7, 0.1, 0.2), 1).is_err());
    }
}
