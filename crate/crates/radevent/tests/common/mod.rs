//! Shared test tooling: an exhaustive matching oracle implemented
//! independently of the production aligner, random matching instances, and a
//! corpus perturber that damages predictions while preserving the structural
//! discipline (one event per sentence, at most one pred span overlapping any
//! ref span of the same category) under which overlap scores provably
//! dominate strict scores.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radevent::equivalence::{spans_equivalent, MatchMode};
use radevent::schema::{Schema, ANATOMY_CHILD_ATTR, ANATOMY_PARENT_ATTR};
use radevent::standoff::surface_at;
use radevent::{Document, Entity, TextSpan};

/// Maximum-cardinality bipartite matching size by subset dynamic programming
/// over the prediction side — an exhaustive search over all assignments,
/// sharing no code or idea with the flow-based production aligner. Feasible
/// for ≤ ~16 predictions.
pub fn max_matching_exhaustive(adj: &[Vec<bool>]) -> usize {
    let n = adj.len();
    let m = adj.first().map_or(0, |row| row.len());
    assert!(m <= 16, "oracle limited to small instances");
    let mut next = vec![0usize; 1 << m];
    let mut current = vec![0usize; 1 << m];
    for i in (0..n).rev() {
        for used in 0..(1usize << m) {
            let mut best = next[used];
            for (j, &connected) in adj[i].iter().enumerate() {
                if connected && used & (1 << j) == 0 {
                    best = best.max(1 + next[used | (1 << j)]);
                }
            }
            current[used] = best;
        }
        std::mem::swap(&mut next, &mut current);
    }
    next[0]
}

/// One random per-category alignment instance: reference spans, predicted
/// spans, and the span-equivalence mode to judge them under.
pub struct MatchingInstance {
    pub refs: Vec<TextSpan>,
    pub preds: Vec<TextSpan>,
    pub mode: MatchMode,
}

impl MatchingInstance {
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        self.refs
            .iter()
            .map(|r| {
                self.preds
                    .iter()
                    .map(|p| spans_equivalent(self.mode, r, p))
                    .collect()
            })
            .collect()
    }
}

fn random_span(rng: &mut ChaCha8Rng) -> TextSpan {
    let start = rng.random_range(0..50usize);
    let len = rng.random_range(1..8usize);
    if rng.random_bool(0.15) {
        let second_start = start + len + rng.random_range(1..5usize);
        let second_len = rng.random_range(1..5usize);
        TextSpan::new(vec![
            (start, start + len),
            (second_start, second_start + second_len),
        ])
        .unwrap()
    } else {
        TextSpan::contiguous(start, start + len).unwrap()
    }
}

pub fn random_matching_instance(rng: &mut ChaCha8Rng) -> MatchingInstance {
    let n = rng.random_range(0..=8usize);
    let m = rng.random_range(0..=8usize);
    let mode = if rng.random_bool(0.5) {
        MatchMode::Overlap
    } else {
        MatchMode::Strict
    };
    // Draw preds near refs often enough that edges are common.
    let refs: Vec<TextSpan> = (0..n).map(|_| random_span(rng)).collect();
    let preds: Vec<TextSpan> = (0..m)
        .map(|_| {
            if !refs.is_empty() && rng.random_bool(0.6) {
                // jitter an existing ref span
                let base = refs.choose(rng).unwrap();
                let (s, e) = base.fragments()[0];
                let ns = s.saturating_sub(rng.random_range(0..3usize));
                let ne = e + rng.random_range(0..3usize);
                if rng.random_bool(0.3) {
                    base.clone()
                } else {
                    TextSpan::contiguous(ns, ne.max(ns + 1)).unwrap()
                }
            } else {
                random_span(rng)
            }
        })
        .collect();
    MatchingInstance { refs, preds, mode }
}

/// Sentence windows of a text: half-open char ranges ending right before
/// each `.`. Synthetic corpora guarantee no span contains a period, so any
/// annotation lies inside exactly one window.
pub fn sentence_windows(text: &str) -> Vec<(usize, usize)> {
    let mut windows = Vec::new();
    let mut start = 0usize;
    for (i, ch) in text.chars().enumerate() {
        if ch == '.' {
            windows.push((start, i));
            start = i + 1;
        }
    }
    windows
}

fn window_of(windows: &[(usize, usize)], pos: usize) -> (usize, usize) {
    windows
        .iter()
        .copied()
        .find(|&(s, e)| pos >= s && pos < e)
        .expect("span inside a sentence window")
}

fn shrink_span(span: &TextSpan) -> Option<TextSpan> {
    let frags = span.fragments();
    if frags.len() != 1 {
        return None;
    }
    let (s, e) = frags[0];
    if e - s < 3 {
        return None;
    }
    Some(TextSpan::contiguous(s + 1, e - 1).unwrap())
}

fn grow_span(span: &TextSpan, window: (usize, usize)) -> Option<TextSpan> {
    let frags = span.fragments();
    if frags.len() != 1 {
        return None;
    }
    let (s, e) = frags[0];
    let ns = if s > window.0 { s - 1 } else { s };
    let ne = if e < window.1 { e + 1 } else { e };
    if (ns, ne) == (s, e) {
        return None;
    }
    Some(TextSpan::contiguous(ns, ne).unwrap())
}

fn reshape_entity(doc: &mut Document, entity_idx: usize, new_span: TextSpan) {
    let surface = surface_at(&doc.text, &new_span).expect("span within text");
    let entity = &mut doc.entities[entity_idx];
    entity.span = new_span;
    entity.surface = surface;
}

fn max_id_number(ids: impl Iterator<Item = String>, prefix: char) -> u64 {
    ids.filter_map(|id| {
        id.strip_prefix(prefix)
            .and_then(|rest| rest.parse::<u64>().ok())
    })
    .max()
    .unwrap_or(0)
}

/// Whitespace-separated token ranges inside a window.
fn window_tokens(chars: &[char], window: (usize, usize)) -> Vec<(usize, usize)> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (pos, &ch) in chars.iter().enumerate().take(window.1).skip(window.0) {
        let boundary = ch.is_whitespace() || ch == ':';
        match (boundary, start) {
            (false, None) => start = Some(pos),
            (true, Some(s)) => {
                tokens.push((s, pos));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push((s, window.1));
    }
    tokens
}

/// Damages a reference corpus into a plausible system output. Every edit
/// stays inside the host sentence and never puts two same-category spans in
/// one sentence, so per-category overlap graphs keep degree ≤ 1 — the regime
/// where overlap-mode scores are provably ≥ strict-mode scores.
pub fn perturb_corpus(docs: &[Document], schema: &Schema, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    docs.iter()
        .map(|doc| perturb_document(doc, schema, &mut rng))
        .collect()
}

fn perturb_document(original: &Document, schema: &Schema, rng: &mut ChaCha8Rng) -> Document {
    let mut doc = original.clone();
    let windows = sentence_windows(&doc.text);
    let entity_index = |doc: &Document, id: &str| -> usize {
        doc.entities
            .iter()
            .position(|e| e.id == id)
            .expect("entity exists")
    };

    let mut deleted_events = Vec::new();
    for ev_idx in 0..doc.events.len() {
        let roll = rng.random_range(0..100u32);
        match roll {
            0..=44 => {} // keep exact
            45..=59 => {
                // reshape trigger span
                let trigger_id = doc.events[ev_idx].trigger.clone();
                let ent_idx = entity_index(&doc, &trigger_id);
                let span = doc.entities[ent_idx].span.clone();
                let window = window_of(&windows, span.start());
                let new_span = if rng.random_bool(0.5) {
                    shrink_span(&span).or_else(|| grow_span(&span, window))
                } else {
                    grow_span(&span, window).or_else(|| shrink_span(&span))
                };
                if let Some(new_span) = new_span {
                    reshape_entity(&mut doc, ent_idx, new_span);
                }
            }
            60..=69 => {
                // reshape one argument span
                let args = &doc.events[ev_idx].arguments;
                if !args.is_empty() {
                    let pick = rng.random_range(0..args.len());
                    let target = args[pick].target.clone();
                    let ent_idx = entity_index(&doc, &target);
                    let span = doc.entities[ent_idx].span.clone();
                    let window = window_of(&windows, span.start());
                    if let Some(new_span) = grow_span(&span, window) {
                        reshape_entity(&mut doc, ent_idx, new_span);
                    }
                }
            }
            70..=79 => {
                let event_type = doc.events[ev_idx].event_type.clone();
                if let Some(type_def) = schema.event_type(&event_type) {
                    flip_one_subtype(&mut doc, ev_idx, type_def, schema, rng);
                }
            }
            80..=86 => {
                // drop one optional argument (required ones must stay or the
                // document would no longer validate)
                let event = &doc.events[ev_idx];
                let droppable: Vec<usize> = event
                    .arguments
                    .iter()
                    .enumerate()
                    .filter(|(_, arg)| {
                        schema
                            .event_type(&event.event_type)
                            .and_then(|t| t.role(&arg.role))
                            .is_some_and(|r| !r.required)
                    })
                    .map(|(i, _)| i)
                    .collect();
                if let Some(&pick) = droppable.as_slice().choose(rng) {
                    doc.events[ev_idx].arguments.remove(pick);
                }
            }
            87..=93 => deleted_events.push(ev_idx),
            _ => {}
        }
    }
    for &idx in deleted_events.iter().rev() {
        doc.events.remove(idx);
    }

    // Occasionally plant a spurious event in a sentence that carries no
    // annotations at all.
    if rng.random_bool(0.45) {
        add_spurious_event(&mut doc, schema, &windows, rng);
    }
    doc
}

fn flip_one_subtype(
    doc: &mut Document,
    ev_idx: usize,
    type_def: &radevent::schema::EventTypeDef,
    schema: &Schema,
    rng: &mut ChaCha8Rng,
) {
    let mut keys: Vec<String> = doc.events[ev_idx].attributes.keys().cloned().collect();
    keys.shuffle(rng);
    for key in keys {
        if key == ANATOMY_PARENT_ATTR {
            continue; // switching parents would orphan the child value
        }
        let current = doc.events[ev_idx].attributes[&key].clone();
        let replacement = if key == ANATOMY_CHILD_ATTR {
            let parent = match doc.events[ev_idx].attributes.get(ANATOMY_PARENT_ATTR) {
                Some(parent) => parent.clone(),
                None => continue,
            };
            schema.anatomy().children_of(&parent).and_then(|children| {
                let alts: Vec<&String> = children.iter().filter(|c| **c != current).collect();
                alts.as_slice().choose(rng).map(|c| (**c).clone())
            })
        } else {
            type_def.role(&key).and_then(|role| {
                let alts: Vec<&String> =
                    role.vocabulary.iter().filter(|v| **v != current).collect();
                alts.as_slice().choose(rng).map(|v| (**v).clone())
            })
        };
        if let Some(value) = replacement {
            doc.events[ev_idx].attributes.insert(key, value);
            return;
        }
    }
}

fn add_spurious_event(
    doc: &mut Document,
    schema: &Schema,
    windows: &[(usize, usize)],
    rng: &mut ChaCha8Rng,
) {
    let chars: Vec<char> = doc.text.chars().collect();
    let occupied: Vec<(usize, usize)> = doc
        .entities
        .iter()
        .map(|e| window_of(windows, e.span.start()))
        .collect();
    let empty_windows: Vec<(usize, usize)> = windows
        .iter()
        .copied()
        .filter(|w| !occupied.contains(w))
        .collect();
    let Some(type_def) = schema.event_types().choose(rng) else {
        return;
    };
    let required: Vec<_> = type_def.roles.iter().filter(|r| r.required).collect();
    for window in empty_windows {
        let tokens = window_tokens(&chars, window);
        if tokens.len() < 1 + required.len() {
            continue;
        }
        let mut next_t = max_id_number(doc.entities.iter().map(|e| e.id.clone()), 'T') + 1;
        let next_e = max_id_number(doc.events.iter().map(|e| e.id.clone()), 'E') + 1;
        let mut make_entity = |doc: &mut Document, label: &str, (s, e): (usize, usize)| {
            let span = TextSpan::contiguous(s, e).unwrap();
            let surface = surface_at(&doc.text, &span).unwrap();
            let id = format!("T{next_t}");
            next_t += 1;
            doc.entities.push(Entity {
                id: id.clone(),
                label: label.to_owned(),
                span,
                surface,
            });
            id
        };
        let trigger = make_entity(&mut *doc, &type_def.name, tokens[0]);
        let mut arguments = Vec::new();
        let mut attributes = std::collections::BTreeMap::new();
        for (i, role) in required.iter().enumerate() {
            let target = make_entity(&mut *doc, &role.name, tokens[i + 1]);
            arguments.push(radevent::standoff::Argument {
                role: role.name.clone(),
                target,
            });
            let slots = role.subtype_slots();
            if slots.as_slice() == [ANATOMY_PARENT_ATTR, ANATOMY_CHILD_ATTR] {
                let parent = schema.anatomy().parents()[0].clone();
                attributes.insert(ANATOMY_PARENT_ATTR.to_owned(), parent);
                attributes.insert(
                    ANATOMY_CHILD_ATTR.to_owned(),
                    radevent::schema::UNDETERMINED.to_owned(),
                );
            } else if let [slot] = slots.as_slice() {
                attributes.insert((*slot).to_owned(), role.vocabulary[0].clone());
            }
        }
        doc.events.push(radevent::standoff::EventAnnotation {
            id: format!("E{next_e}"),
            event_type: type_def.name.clone(),
            trigger,
            arguments,
            attributes,
        });
        return;
    }
}
