//! Paired bootstrap significance test for the F1 difference between two
//! prediction sets measured against one reference set.
//!
//! Variant: the shift-corrected paired bootstrap. Documents are the
//! resampling unit; each replicate draws document ids with replacement,
//! re-sums the precomputed per-document counts for both systems, and records
//! the F1 difference. With observed difference δ > 0 the p-value is the
//! fraction of replicate differences exceeding 2δ (the resampled mean sits
//! near δ, so exceeding 2δ plays the role of "as extreme under the null").
//! The test is applied two-sided by symmetry: when δ < 0 the roles swap, and
//! δ = 0 (e.g. identical systems) reports p = 1.0 outright.
//!
//! For tiny corpora the full resample space can be enumerated instead of
//! sampled, giving a seed-independent exact fraction.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::equivalence::MatchMode;
use crate::schema::{validate_corpus, Schema};
use crate::scoring::{category_grid, prf, score_document_pair, CategoryKey, Counts, ScoreError};
use crate::standoff::Document;

/// Which F1 the test compares: the micro-averaged overall row or one
/// category row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Metric {
    Overall,
    Category(CategoryKey),
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Overall => write!(f, "overall"),
            Metric::Category(key) => write!(f, "{key}"),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("overall") {
            Ok(Metric::Overall)
        } else {
            s.parse().map(Metric::Category)
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapResult {
    pub metric: Metric,
    /// F1(system A) − F1(system B) on the full corpus.
    pub observed_delta: f64,
    pub p_value: f64,
    /// Number of resamples inspected (the full enumeration count in
    /// exhaustive mode).
    pub replicates: u64,
    /// Seed of the resampling generator; meaningless in exhaustive mode.
    pub seed: u64,
    pub exhaustive: bool,
}

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("{0}")]
    Parameter(String),
}

/// Per-document (system A, system B) counts on the tested metric.
fn per_doc_counts(
    refs: &[Document],
    preds_a: &[Document],
    preds_b: &[Document],
    schema: &Schema,
    mode: MatchMode,
    metric: &Metric,
) -> Result<Vec<(Counts, Counts)>, BootstrapError> {
    if let Metric::Category(key) = metric {
        if !category_grid(schema).contains(key) {
            return Err(BootstrapError::Parameter(format!(
                "metric '{key}' names no schema category"
            )));
        }
    }
    let index =
        |docs: &[Document]| -> Result<std::collections::BTreeMap<String, usize>, ScoreError> {
            let mut map = std::collections::BTreeMap::new();
            for (i, doc) in docs.iter().enumerate() {
                if map.insert(doc.id.clone(), i).is_some() {
                    return Err(ScoreError::DuplicateDocId(doc.id.clone()));
                }
            }
            Ok(map)
        };
    let ref_index = index(refs)?;
    for preds in [preds_a, preds_b] {
        let pred_index = index(preds)?;
        if pred_index.keys().ne(ref_index.keys()) {
            return Err(BootstrapError::Score(ScoreError::PairingMismatch {
                missing_in_pred: ref_index
                    .keys()
                    .filter(|id| !pred_index.contains_key(*id))
                    .cloned()
                    .collect(),
                missing_in_ref: pred_index
                    .keys()
                    .filter(|id| !ref_index.contains_key(*id))
                    .cloned()
                    .collect(),
            }));
        }
    }
    let mut violations = validate_corpus(schema, refs);
    violations.extend(validate_corpus(schema, preds_a));
    violations.extend(validate_corpus(schema, preds_b));
    if !violations.is_empty() {
        violations.sort();
        violations.dedup();
        return Err(BootstrapError::Score(ScoreError::Validation { violations }));
    }

    let a_index = index(preds_a)?;
    let b_index = index(preds_b)?;
    let extract = |outcome: &std::collections::BTreeMap<CategoryKey, Counts>| -> Counts {
        match metric {
            Metric::Overall => {
                let mut total = Counts::default();
                for c in outcome.values() {
                    total.tp += c.tp;
                    total.fp += c.fp;
                    total.fn_ += c.fn_;
                }
                total
            }
            Metric::Category(key) => outcome.get(key).copied().unwrap_or_default(),
        }
    };
    Ok(ref_index
        .iter()
        .map(|(id, &ref_i)| {
            let a = score_document_pair(&refs[ref_i], &preds_a[a_index[id]], schema, mode);
            let b = score_document_pair(&refs[ref_i], &preds_b[b_index[id]], schema, mode);
            (extract(&a.counts), extract(&b.counts))
        })
        .collect())
}

/// F1(A) − F1(B) over the selected documents (by index, repeats allowed).
fn delta_over(counts: &[(Counts, Counts)], selection: impl Iterator<Item = usize>) -> f64 {
    let mut a = Counts::default();
    let mut b = Counts::default();
    for i in selection {
        let (ca, cb) = counts[i];
        a.tp += ca.tp;
        a.fp += ca.fp;
        a.fn_ += ca.fn_;
        b.tp += cb.tp;
        b.fp += cb.fp;
        b.fn_ += cb.fn_;
    }
    prf(a.tp, a.fp, a.fn_).f1 - prf(b.tp, b.fp, b.fn_).f1
}

/// Counts one replicate against the shift-corrected threshold, role-swapped
/// when the observed difference is negative.
fn exceeds(delta: f64, observed: f64) -> bool {
    if observed > 0.0 {
        delta > 2.0 * observed
    } else {
        delta < 2.0 * observed
    }
}

fn sampled_p(counts: &[(Counts, Counts)], observed: f64, replicates: u64, seed: u64) -> f64 {
    if observed == 0.0 {
        return 1.0;
    }
    let n = counts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceedances = 0u64;
    for _ in 0..replicates {
        let delta = delta_over(counts, (0..n).map(|_| rng.random_range(0..n)));
        if exceeds(delta, observed) {
            exceedances += 1;
        }
    }
    exceedances as f64 / replicates as f64
}

fn exhaustive_p(counts: &[(Counts, Counts)], observed: f64) -> Result<(f64, u64), BootstrapError> {
    let n = counts.len();
    let total = (n as u64)
        .checked_pow(n as u32)
        .filter(|&t| t <= 1_000_000)
        .ok_or_else(|| {
            BootstrapError::Parameter(format!(
                "exhaustive enumeration needs n^n resamples; n = {n} is too large (limit 1000000)"
            ))
        })?;
    if observed == 0.0 {
        return Ok((1.0, total));
    }
    let mut selection = vec![0usize; n];
    let mut exceedances = 0u64;
    loop {
        let delta = delta_over(counts, selection.iter().copied());
        if exceeds(delta, observed) {
            exceedances += 1;
        }
        // Odometer increment over the n^n index sequences.
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok((exceedances as f64 / total as f64, total));
            }
            selection[pos] += 1;
            if selection[pos] < n {
                break;
            }
            selection[pos] = 0;
            pos += 1;
        }
    }
}

/// Paired bootstrap over documents: resamples the corpus `replicates` times
/// with a generator seeded by `seed` and reports the shift-corrected p-value
/// for the F1 difference between systems A and B on `metric`.
#[allow(clippy::too_many_arguments)]
pub fn paired_bootstrap(
    refs: &[Document],
    preds_a: &[Document],
    preds_b: &[Document],
    schema: &Schema,
    mode: MatchMode,
    metric: Metric,
    replicates: u64,
    seed: u64,
) -> Result<BootstrapResult, BootstrapError> {
    if replicates == 0 {
        return Err(BootstrapError::Parameter(
            "replicates must be ≥ 1".to_owned(),
        ));
    }
    if refs.is_empty() {
        return Err(BootstrapError::Parameter("corpus is empty".to_owned()));
    }
    let counts = per_doc_counts(refs, preds_a, preds_b, schema, mode, &metric)?;
    let observed = delta_over(&counts, 0..counts.len());
    let p_value = sampled_p(&counts, observed, replicates, seed);
    Ok(BootstrapResult {
        metric,
        observed_delta: observed,
        p_value,
        replicates,
        seed,
        exhaustive: false,
    })
}

/// Exact version of [`paired_bootstrap`]: enumerates all n^n resample
/// sequences instead of sampling, so the result is seed-independent. Only
/// feasible for tiny corpora (n^n ≤ 1e6, i.e. n ≤ 7).
pub fn paired_bootstrap_exhaustive(
    refs: &[Document],
    preds_a: &[Document],
    preds_b: &[Document],
    schema: &Schema,
    mode: MatchMode,
    metric: Metric,
) -> Result<BootstrapResult, BootstrapError> {
    if refs.is_empty() {
        return Err(BootstrapError::Parameter("corpus is empty".to_owned()));
    }
    let counts = per_doc_counts(refs, preds_a, preds_b, schema, mode, &metric)?;
    let observed = delta_over(&counts, 0..counts.len());
    let (p_value, total) = exhaustive_p(&counts, observed)?;
    Ok(BootstrapResult {
        metric,
        observed_delta: observed,
        p_value,
        replicates: total,
        seed: 0,
        exhaustive: true,
    })
}
