//! Deterministic one-to-one pairing of reference and predicted annotations.
//!
//! Scoring needs a pairing before anything can be counted: each reference
//! annotation may match at most one prediction and vice versa. [`align`]
//! returns a maximum-cardinality matching over the bipartite graph whose
//! edges are the equivalent (ref, pred) pairs, with ties broken first by
//! maximal total overlapping character count and then by the
//! lexicographically smallest pair sequence ordered on (ref span, pred span).
//! The result is fully deterministic and independent of input order.
//!
//! Implementation: min-cost max-flow (successive shortest paths with
//! Bellman-Ford, edge cost = negated character overlap) yields the optimal
//! (cardinality, total overlap) value; a greedy pass over edges in ascending
//! span order then pins down the unique lexicographically smallest matching
//! attaining that value, re-solving the residual instance to check that each
//! tentative pin stays optimal.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::standoff::TextSpan;

/// One annotation offered to the aligner: a caller-unique id plus its span.
/// The span drives the overlap weight and the deterministic ordering; all
/// other annotation content is consulted only through the equivalence
/// predicate.
#[derive(Debug, Clone)]
pub struct AlignItem<'a> {
    pub id: String,
    pub span: &'a TextSpan,
}

impl<'a> AlignItem<'a> {
    pub fn new(id: impl Into<String>, span: &'a TextSpan) -> Self {
        AlignItem {
            id: id.into(),
            span,
        }
    }
}

/// A one-to-one pairing between two annotation lists plus the unmatched
/// residue on both sides. Pairs are sorted by (ref span, pred span);
/// unmatched ids are sorted by (span, id).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Matching {
    pub pairs: Vec<(String, String)>,
    pub unmatched_ref: Vec<String>,
    pub unmatched_pred: Vec<String>,
}

/// Maximum-cardinality, maximum-overlap, lexicographically smallest matching
/// between `refs` and `preds` under the given equivalence predicate. The
/// predicate receives *original* indices into the two slices.
///
/// Ids must be unique within each side.
pub fn align<F>(refs: &[AlignItem], preds: &[AlignItem], equivalent: F) -> Matching
where
    F: Fn(usize, usize) -> bool,
{
    for side in [refs, preds] {
        let mut seen = BTreeSet::new();
        for item in side {
            assert!(
                seen.insert(item.id.as_str()),
                "duplicate align id {}",
                item.id
            );
        }
    }

    // Canonical vertex order: by (span, id), so nothing downstream depends on
    // the order the caller listed the annotations in.
    let canonical = |items: &[AlignItem]| -> Vec<usize> {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.sort_by(|&a, &b| (items[a].span, &items[a].id).cmp(&(items[b].span, &items[b].id)));
        order
    };
    let ref_order = canonical(refs);
    let pred_order = canonical(preds);

    // Edge list in ascending (ref key, pred key) order; this is the order the
    // lexicographic pin-down scans.
    let mut edges: Vec<Edge> = Vec::new();
    for &i in &ref_order {
        for &j in &pred_order {
            if equivalent(i, j) {
                edges.push(Edge {
                    ref_idx: i,
                    pred_idx: j,
                    weight: refs[i].span.overlap_chars(preds[j].span) as u64,
                });
            }
        }
    }

    let solver = Solver {
        n_refs: refs.len(),
        n_preds: preds.len(),
        edges: &edges,
    };
    let (total_card, total_weight) = solver.best(&[], &[]);

    // Greedy lexicographic pin-down: scan edges in ascending order and keep
    // an edge exactly when some optimal matching extends the kept set with
    // it. The kept set is therefore the lexicographically smallest optimal
    // matching under the scan order.
    let mut pinned: Vec<usize> = Vec::new();
    let mut pinned_weight: u64 = 0;
    let mut used_ref = vec![false; refs.len()];
    let mut used_pred = vec![false; preds.len()];
    for (edge_idx, edge) in edges.iter().enumerate() {
        if pinned.len() == total_card {
            break;
        }
        if used_ref[edge.ref_idx] || used_pred[edge.pred_idx] {
            continue;
        }
        let mut banned_ref: Vec<usize> = pinned.iter().map(|&e| edges[e].ref_idx).collect();
        banned_ref.push(edge.ref_idx);
        let mut banned_pred: Vec<usize> = pinned.iter().map(|&e| edges[e].pred_idx).collect();
        banned_pred.push(edge.pred_idx);
        let (rest_card, rest_weight) = solver.best(&banned_ref, &banned_pred);
        if pinned.len() + 1 + rest_card == total_card
            && pinned_weight + edge.weight + rest_weight == total_weight
        {
            pinned.push(edge_idx);
            pinned_weight += edge.weight;
            used_ref[edge.ref_idx] = true;
            used_pred[edge.pred_idx] = true;
        }
    }
    debug_assert_eq!(pinned.len(), total_card);

    let pairs = pinned
        .iter()
        .map(|&e| {
            (
                refs[edges[e].ref_idx].id.clone(),
                preds[edges[e].pred_idx].id.clone(),
            )
        })
        .collect();
    let unmatched_ref = ref_order
        .iter()
        .filter(|&&i| !used_ref[i])
        .map(|&i| refs[i].id.clone())
        .collect();
    let unmatched_pred = pred_order
        .iter()
        .filter(|&&j| !used_pred[j])
        .map(|&j| preds[j].id.clone())
        .collect();
    Matching {
        pairs,
        unmatched_ref,
        unmatched_pred,
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    ref_idx: usize,
    pred_idx: usize,
    weight: u64,
}

/// Min-cost max-flow instance over the bipartite equivalence graph.
/// `best` returns (maximum cardinality, maximum total weight among matchings
/// of that cardinality) with the listed vertices removed.
struct Solver<'a> {
    n_refs: usize,
    n_preds: usize,
    edges: &'a [Edge],
}

#[derive(Debug, Clone, Copy)]
struct FlowEdge {
    to: usize,
    cap: i64,
    cost: i64,
}

impl Solver<'_> {
    fn best(&self, banned_refs: &[usize], banned_preds: &[usize]) -> (usize, u64) {
        let source = 0;
        let ref_node = |i: usize| 1 + i;
        let pred_node = |j: usize| 1 + self.n_refs + j;
        let sink = 1 + self.n_refs + self.n_preds;
        let n = sink + 1;

        let mut graph: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut flow_edges: Vec<FlowEdge> = Vec::new();
        let add_edge = |graph: &mut Vec<Vec<usize>>,
                        flow_edges: &mut Vec<FlowEdge>,
                        from: usize,
                        to: usize,
                        cap: i64,
                        cost: i64| {
            graph[from].push(flow_edges.len());
            flow_edges.push(FlowEdge { to, cap, cost });
            graph[to].push(flow_edges.len());
            flow_edges.push(FlowEdge {
                to: from,
                cap: 0,
                cost: -cost,
            });
        };

        let ref_banned = {
            let mut banned = vec![false; self.n_refs];
            for &i in banned_refs {
                banned[i] = true;
            }
            banned
        };
        let pred_banned = {
            let mut banned = vec![false; self.n_preds];
            for &j in banned_preds {
                banned[j] = true;
            }
            banned
        };
        for (i, &banned) in ref_banned.iter().enumerate() {
            if !banned {
                add_edge(&mut graph, &mut flow_edges, source, ref_node(i), 1, 0);
            }
        }
        for (j, &banned) in pred_banned.iter().enumerate() {
            if !banned {
                add_edge(&mut graph, &mut flow_edges, pred_node(j), sink, 1, 0);
            }
        }
        for edge in self.edges {
            if !ref_banned[edge.ref_idx] && !pred_banned[edge.pred_idx] {
                add_edge(
                    &mut graph,
                    &mut flow_edges,
                    ref_node(edge.ref_idx),
                    pred_node(edge.pred_idx),
                    1,
                    -(edge.weight as i64),
                );
            }
        }

        // Successive shortest augmenting paths (Bellman-Ford handles the
        // negative residual costs). Each augmentation adds one matched pair
        // at minimum cost, so stopping at max flow leaves the maximum total
        // weight for that cardinality.
        let mut cardinality = 0usize;
        let mut total_cost = 0i64;
        loop {
            let mut dist = vec![i64::MAX; n];
            let mut pred_edge = vec![usize::MAX; n];
            let mut in_queue = vec![false; n];
            dist[source] = 0;
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(source);
            in_queue[source] = true;
            while let Some(u) = queue.pop_front() {
                in_queue[u] = false;
                for &edge_id in &graph[u] {
                    let edge = flow_edges[edge_id];
                    if edge.cap > 0 && dist[u] != i64::MAX && dist[u] + edge.cost < dist[edge.to] {
                        dist[edge.to] = dist[u] + edge.cost;
                        pred_edge[edge.to] = edge_id;
                        if !in_queue[edge.to] {
                            queue.push_back(edge.to);
                            in_queue[edge.to] = true;
                        }
                    }
                }
            }
            if dist[sink] == i64::MAX {
                break;
            }
            let mut node = sink;
            while node != source {
                let edge_id = pred_edge[node];
                flow_edges[edge_id].cap -= 1;
                flow_edges[edge_id ^ 1].cap += 1;
                node = flow_edges[edge_id ^ 1].to;
            }
            cardinality += 1;
            total_cost += dist[sink];
        }
        (cardinality, (-total_cost) as u64)
    }
}
