//! Standoff annotation I/O.
//!
//! Documents are stored as a plain-text report (`<id>.txt`) plus a
//! line-oriented annotation file (`<id>.ann`) with three record kinds:
//!
//! ```text
//! T<id>\t<Label> <start> <end>[;<start> <end>]*\t<surface>
//! E<id>\t<Type>:<Tid>[ <Role>:<Tid>]*
//! A<id>\t<Name> <Tid|Eid>[ <Value>]
//! ```
//!
//! Offsets count Unicode scalar values, not bytes. Attribute lines may target
//! either an event id or any entity belonging to an event; both are
//! normalized onto the owning event's attribute map so the scorer has one
//! canonical place to look for subtype values.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Location of one annotation as ordered, non-overlapping half-open
/// `(start, end)` character intervals over the document text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TextSpan {
    fragments: Vec<(usize, usize)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpanError {
    #[error("span has no fragments")]
    Empty,
    #[error("zero-length or inverted fragment ({0}, {1})")]
    BadFragment(usize, usize),
    #[error("fragments out of order or overlapping at ({0}, {1})")]
    Unordered(usize, usize),
}

impl TextSpan {
    /// Builds a span, enforcing that fragments are non-empty, sorted by
    /// start, and pairwise non-overlapping (touching fragments are allowed).
    pub fn new(fragments: Vec<(usize, usize)>) -> Result<Self, SpanError> {
        if fragments.is_empty() {
            return Err(SpanError::Empty);
        }
        let mut prev_end = None;
        for &(start, end) in &fragments {
            if start >= end {
                return Err(SpanError::BadFragment(start, end));
            }
            if let Some(prev) = prev_end {
                if start < prev {
                    return Err(SpanError::Unordered(start, end));
                }
            }
            prev_end = Some(end);
        }
        Ok(TextSpan { fragments })
    }

    /// Single-fragment convenience constructor.
    pub fn contiguous(start: usize, end: usize) -> Result<Self, SpanError> {
        TextSpan::new(vec![(start, end)])
    }

    pub fn fragments(&self) -> &[(usize, usize)] {
        &self.fragments
    }

    /// First covered character offset.
    pub fn start(&self) -> usize {
        self.fragments[0].0
    }

    /// One past the last covered character offset.
    pub fn end(&self) -> usize {
        self.fragments[self.fragments.len() - 1].1
    }

    /// Number of characters covered.
    pub fn char_len(&self) -> usize {
        self.fragments.iter().map(|&(s, e)| e - s).sum()
    }

    /// True iff some fragment of `self` intersects some fragment of `other`.
    pub fn intersects(&self, other: &TextSpan) -> bool {
        self.overlap_chars(other) > 0
    }

    /// Number of characters covered by both spans.
    pub fn overlap_chars(&self, other: &TextSpan) -> usize {
        let mut total = 0;
        let (mut i, mut j) = (0, 0);
        while i < self.fragments.len() && j < other.fragments.len() {
            let (a_start, a_end) = self.fragments[i];
            let (b_start, b_end) = other.fragments[j];
            let lo = a_start.max(b_start);
            let hi = a_end.min(b_end);
            if lo < hi {
                total += hi - lo;
            }
            if a_end <= b_end {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    /// True iff every character covered by `other` is covered by `self`.
    pub fn covers(&self, other: &TextSpan) -> bool {
        other.char_len() == self.overlap_chars(other)
    }
}

impl fmt::Display for TextSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (start, end)) in self.fragments.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{start} {end}")?;
        }
        Ok(())
    }
}

impl Serialize for TextSpan {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.fragments.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TextSpan {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let fragments = Vec::<(usize, usize)>::deserialize(deserializer)?;
        TextSpan::new(fragments).map_err(D::Error::custom)
    }
}

/// One annotated span with its label and the exact text it covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub label: String,
    pub span: TextSpan,
    /// Fragment texts joined with a single space. Newlines and tabs inside a
    /// fragment appear as spaces, mirroring the annotation tool's convention.
    pub surface: String,
}

/// One event argument: a role name plus the id of the entity filling it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Argument {
    pub role: String,
    pub target: String,
}

/// An event: a typed trigger entity plus zero or more arguments, with the
/// event's subtype values gathered into one attribute map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventAnnotation {
    pub id: String,
    pub event_type: String,
    pub trigger: String,
    pub arguments: Vec<Argument>,
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "CT")]
    Ct,
    #[serde(rename = "MRI")]
    Mri,
    #[serde(rename = "PET-CT")]
    PetCt,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modality::Ct => write!(f, "CT"),
            Modality::Mri => write!(f, "MRI"),
            Modality::PetCt => write!(f, "PET-CT"),
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CT" => Ok(Modality::Ct),
            "MRI" => Ok(Modality::Mri),
            "PET-CT" => Ok(Modality::PetCt),
            other => Err(format!("unknown modality '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Validation => write!(f, "validation"),
            Split::Test => write!(f, "test"),
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub modality: Option<Modality>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split: Option<Split>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub synthetic: bool,
}

/// A report's text plus its annotations; the unit of scoring and resampling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub entities: Vec<Entity>,
    pub events: Vec<EventAnnotation>,
    #[serde(default)]
    pub metadata: Metadata,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: malformed annotation line: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unsupported line type '{prefix}' (only T/E/A records and # comments are accepted)")]
    UnsupportedLine { line: usize, prefix: String },
    #[error("line {line}: duplicate annotation id {id}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: reference to unknown annotation id {id}")]
    DanglingReference { line: usize, id: String },
    #[error("line {line}: span out of bounds: {span} exceeds text length {len}")]
    SpanOutOfBounds {
        line: usize,
        span: String,
        len: usize,
    },
    #[error("line {line}: surface text mismatch: annotation declares {declared:?} but text at {span} reads {actual:?}")]
    SurfaceMismatch {
        line: usize,
        declared: String,
        actual: String,
        span: String,
    },
    #[error(
        "line {line}: event type '{event_type}' does not match trigger label '{trigger_label}'"
    )]
    TriggerTypeMismatch {
        line: usize,
        event_type: String,
        trigger_label: String,
    },
    #[error("line {line}: attribute target {target} does not belong to any event")]
    UnownedAttributeTarget { line: usize, target: String },
    #[error("line {line}: conflicting values for attribute '{name}' on event {event}")]
    ConflictingAttribute {
        line: usize,
        name: String,
        event: String,
    },
}

#[derive(Debug, Error)]
pub enum SerializeError {
    #[error("document {doc}: invariant violated: {invariant}")]
    InvariantViolated { doc: String, invariant: String },
}

fn id_number(id: &str, prefix: char) -> Option<u64> {
    let rest = id.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

/// Extracts the span's text from the char-indexed document, joining fragments
/// with one space and mapping newlines/tabs to spaces.
fn extract_surface(chars: &[char], span: &TextSpan) -> String {
    let mut out = String::new();
    for (i, &(start, end)) in span.fragments().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        for &c in &chars[start..end] {
            out.push(if c == '\n' || c == '\r' || c == '\t' {
                ' '
            } else {
                c
            });
        }
    }
    out
}

/// Extracts the surface string a span covers in `text`, using the same
/// fragment-joining and whitespace normalization as the parser. Returns
/// `None` when the span exceeds the text.
pub fn surface_at(text: &str, span: &TextSpan) -> Option<String> {
    let chars: Vec<char> = text.chars().collect();
    if span.end() > chars.len() {
        return None;
    }
    Some(extract_surface(&chars, span))
}

/// Splits a T-line's middle field into label and offset list. The offset list
/// is the longest numeric suffix of the space-separated tokens, which leaves
/// labels free to contain spaces and digits.
fn split_label_offsets(field: &str) -> Option<(String, Vec<(usize, usize)>)> {
    let tokens: Vec<&str> = field.split(' ').collect();
    for label_len in 1..tokens.len() {
        if let Some(fragments) = parse_offsets(&tokens[label_len..].join(" ")) {
            let label = tokens[..label_len].join(" ");
            if !label.is_empty() {
                return Some((label, fragments));
            }
        }
    }
    None
}

fn parse_offsets(s: &str) -> Option<Vec<(usize, usize)>> {
    let mut fragments = Vec::new();
    for piece in s.split(';') {
        let mut nums = piece.split_whitespace();
        let start: usize = nums.next()?.parse().ok()?;
        let end: usize = nums.next()?.parse().ok()?;
        if nums.next().is_some() {
            return None;
        }
        fragments.push((start, end));
    }
    Some(fragments)
}

/// Parses `Name:Ref` units where names may contain spaces, e.g.
/// `Medical Problem:T1 Anatomy:T2`.
fn parse_colon_units(field: &str) -> Result<Vec<(String, String)>, String> {
    let mut units = Vec::new();
    let mut pending: Vec<&str> = Vec::new();
    for token in field.split(' ') {
        if token.is_empty() {
            return Err("empty token (double space?)".to_owned());
        }
        match token.find(':') {
            Some(pos) => {
                let mut name = pending.join(" ");
                if !name.is_empty() {
                    name.push(' ');
                }
                name.push_str(&token[..pos]);
                let target = &token[pos + 1..];
                if name.is_empty() || target.is_empty() {
                    return Err(format!("incomplete name:ref unit '{token}'"));
                }
                units.push((name, target.to_owned()));
                pending.clear();
            }
            None => pending.push(token),
        }
    }
    if !pending.is_empty() {
        return Err(format!(
            "trailing tokens without ':<ref>': '{}'",
            pending.join(" ")
        ));
    }
    if units.is_empty() {
        return Err("no name:ref units".to_owned());
    }
    Ok(units)
}

struct RawEvent {
    line: usize,
    id: String,
    event_type: String,
    trigger: String,
    arguments: Vec<Argument>,
}

struct RawAttribute {
    line: usize,
    name: String,
    target: String,
    value: String,
}

/// Parses a text/annotation pair into a [`Document`].
///
/// Lines starting with `#` are ignored. R, N, and M records are rejected
/// rather than skipped, so relation or normalization content cannot be lost
/// silently.
pub fn parse_document(
    text_content: &str,
    ann_content: &str,
    doc_id: &str,
) -> Result<Document, ParseError> {
    let chars: Vec<char> = text_content.chars().collect();
    let mut entities: Vec<Entity> = Vec::new();
    let mut entity_index: HashMap<String, usize> = HashMap::new();
    let mut raw_events: Vec<RawEvent> = Vec::new();
    let mut event_ids: BTreeSet<String> = BTreeSet::new();
    let mut raw_attrs: Vec<RawAttribute> = Vec::new();
    let mut attr_ids: BTreeSet<String> = BTreeSet::new();

    for (idx, raw_line) in ann_content.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = |message: String| ParseError::Malformed { line, message };
        let mut fields = trimmed.split('\t');
        let id_field = fields.next().unwrap_or("");
        let prefix = id_field.chars().next().unwrap_or(' ');
        match prefix {
            'T' => {
                let body = fields
                    .next()
                    .ok_or_else(|| malformed("expected 3 tab-separated fields".into()))?;
                let surface = fields
                    .next()
                    .ok_or_else(|| malformed("expected 3 tab-separated fields".into()))?;
                if fields.next().is_some() {
                    return Err(malformed("expected exactly 3 tab-separated fields".into()));
                }
                if id_number(id_field, 'T').is_none() {
                    return Err(malformed(format!("bad entity id '{id_field}'")));
                }
                let (label, fragments) = split_label_offsets(body).ok_or_else(|| {
                    malformed(format!("cannot split label and offsets in '{body}'"))
                })?;
                let span = TextSpan::new(fragments).map_err(|e| malformed(e.to_string()))?;
                if span.end() > chars.len() {
                    return Err(ParseError::SpanOutOfBounds {
                        line,
                        span: span.to_string(),
                        len: chars.len(),
                    });
                }
                let actual = extract_surface(&chars, &span);
                if actual != surface {
                    return Err(ParseError::SurfaceMismatch {
                        line,
                        declared: surface.to_owned(),
                        actual,
                        span: span.to_string(),
                    });
                }
                if entity_index.contains_key(id_field) {
                    return Err(ParseError::DuplicateId {
                        line,
                        id: id_field.to_owned(),
                    });
                }
                entity_index.insert(id_field.to_owned(), entities.len());
                entities.push(Entity {
                    id: id_field.to_owned(),
                    label,
                    span,
                    surface: surface.to_owned(),
                });
            }
            'E' => {
                let body = fields
                    .next()
                    .ok_or_else(|| malformed("expected 2 tab-separated fields".into()))?;
                if fields.next().is_some() {
                    return Err(malformed("expected exactly 2 tab-separated fields".into()));
                }
                if id_number(id_field, 'E').is_none() {
                    return Err(malformed(format!("bad event id '{id_field}'")));
                }
                let units = parse_colon_units(body).map_err(&malformed)?;
                if !event_ids.insert(id_field.to_owned()) {
                    return Err(ParseError::DuplicateId {
                        line,
                        id: id_field.to_owned(),
                    });
                }
                let (event_type, trigger) = units[0].clone();
                let arguments = units[1..]
                    .iter()
                    .map(|(role, target)| Argument {
                        role: role.clone(),
                        target: target.clone(),
                    })
                    .collect();
                raw_events.push(RawEvent {
                    line,
                    id: id_field.to_owned(),
                    event_type,
                    trigger,
                    arguments,
                });
            }
            'A' => {
                let body = fields
                    .next()
                    .ok_or_else(|| malformed("expected 2 tab-separated fields".into()))?;
                if fields.next().is_some() {
                    return Err(malformed("expected exactly 2 tab-separated fields".into()));
                }
                if id_number(id_field, 'A').is_none() {
                    return Err(malformed(format!("bad attribute id '{id_field}'")));
                }
                if !attr_ids.insert(id_field.to_owned()) {
                    return Err(ParseError::DuplicateId {
                        line,
                        id: id_field.to_owned(),
                    });
                }
                let tokens: Vec<&str> = body.split(' ').collect();
                let target_pos = tokens
                    .iter()
                    .position(|t| id_number(t, 'T').is_some() || id_number(t, 'E').is_some())
                    .ok_or_else(|| malformed(format!("no annotation id target in '{body}'")))?;
                if target_pos == 0 {
                    return Err(malformed(format!("attribute name missing in '{body}'")));
                }
                raw_attrs.push(RawAttribute {
                    line,
                    name: tokens[..target_pos].join(" "),
                    target: tokens[target_pos].to_owned(),
                    value: tokens[target_pos + 1..].join(" "),
                });
            }
            _ => {
                return Err(ParseError::UnsupportedLine {
                    line,
                    prefix: prefix.to_string(),
                });
            }
        }
    }

    // Resolve events against entities.
    let mut events: Vec<EventAnnotation> = Vec::new();
    for raw in raw_events {
        let trigger_idx = *entity_index
            .get(&raw.trigger)
            .ok_or(ParseError::DanglingReference {
                line: raw.line,
                id: raw.trigger.clone(),
            })?;
        let trigger_label = &entities[trigger_idx].label;
        if *trigger_label != raw.event_type {
            return Err(ParseError::TriggerTypeMismatch {
                line: raw.line,
                event_type: raw.event_type,
                trigger_label: trigger_label.clone(),
            });
        }
        for arg in &raw.arguments {
            if !entity_index.contains_key(&arg.target) {
                return Err(ParseError::DanglingReference {
                    line: raw.line,
                    id: arg.target.clone(),
                });
            }
        }
        events.push(EventAnnotation {
            id: raw.id,
            event_type: raw.event_type,
            trigger: raw.trigger,
            arguments: raw.arguments,
            attributes: BTreeMap::new(),
        });
    }

    // Normalize attributes onto owning events. An attribute may target the
    // event id directly or any entity the event references.
    let mut owners: HashMap<String, Vec<usize>> = HashMap::new();
    for (ev_idx, event) in events.iter().enumerate() {
        owners.entry(event.id.clone()).or_default().push(ev_idx);
        owners
            .entry(event.trigger.clone())
            .or_default()
            .push(ev_idx);
        for arg in &event.arguments {
            let slot = owners.entry(arg.target.clone()).or_default();
            if !slot.contains(&ev_idx) {
                slot.push(ev_idx);
            }
        }
    }
    for attr in raw_attrs {
        let owning = match owners.get(attr.target.as_str()) {
            Some(events) => events.clone(),
            None => {
                if entity_index.contains_key(&attr.target) {
                    return Err(ParseError::UnownedAttributeTarget {
                        line: attr.line,
                        target: attr.target,
                    });
                }
                return Err(ParseError::DanglingReference {
                    line: attr.line,
                    id: attr.target,
                });
            }
        };
        for ev_idx in owning {
            let event = &mut events[ev_idx];
            match event.attributes.get(&attr.name) {
                Some(existing) if *existing != attr.value => {
                    return Err(ParseError::ConflictingAttribute {
                        line: attr.line,
                        name: attr.name.clone(),
                        event: event.id.clone(),
                    });
                }
                _ => {
                    event
                        .attributes
                        .insert(attr.name.clone(), attr.value.clone());
                }
            }
        }
    }

    Ok(Document {
        id: doc_id.to_owned(),
        text: text_content.to_owned(),
        entities,
        events,
        metadata: Metadata::default(),
    })
}

fn check_document(doc: &Document) -> Result<(), String> {
    let chars: Vec<char> = doc.text.chars().collect();
    let mut entity_ids: BTreeMap<&str, &Entity> = BTreeMap::new();
    for entity in &doc.entities {
        if id_number(&entity.id, 'T').is_none() {
            return Err(format!(
                "entity id '{}' is not of the form T<number>",
                entity.id
            ));
        }
        if entity_ids.insert(&entity.id, entity).is_some() {
            return Err(format!("duplicate entity id {}", entity.id));
        }
        if entity.span.end() > chars.len() {
            return Err(format!(
                "entity {} span {} exceeds text length {}",
                entity.id,
                entity.span,
                chars.len()
            ));
        }
        let actual = extract_surface(&chars, &entity.span);
        if actual != entity.surface {
            return Err(format!(
                "entity {} surface {:?} does not match text {:?}",
                entity.id, entity.surface, actual
            ));
        }
    }
    let mut event_ids: BTreeSet<&str> = BTreeSet::new();
    for event in &doc.events {
        if id_number(&event.id, 'E').is_none() {
            return Err(format!(
                "event id '{}' is not of the form E<number>",
                event.id
            ));
        }
        if !event_ids.insert(&event.id) {
            return Err(format!("duplicate event id {}", event.id));
        }
        let trigger = entity_ids.get(event.trigger.as_str()).ok_or_else(|| {
            format!(
                "event {} trigger {} does not resolve",
                event.id, event.trigger
            )
        })?;
        if trigger.label != event.event_type {
            return Err(format!(
                "event {} type '{}' does not match trigger label '{}'",
                event.id, event.event_type, trigger.label
            ));
        }
        for arg in &event.arguments {
            if !entity_ids.contains_key(arg.target.as_str()) {
                return Err(format!(
                    "event {} argument {} does not resolve",
                    event.id, arg.target
                ));
            }
        }
    }
    Ok(())
}

/// Serializes a document back to `(text, ann)` content. Annotation lines are
/// emitted in stable numeric id order; attribute lines are regenerated on the
/// owning event ids. Refuses documents violating any structural invariant.
pub fn serialize_document(doc: &Document) -> Result<(String, String), SerializeError> {
    check_document(doc).map_err(|invariant| SerializeError::InvariantViolated {
        doc: doc.id.clone(),
        invariant,
    })?;

    let mut entities: Vec<&Entity> = doc.entities.iter().collect();
    entities.sort_by_key(|e| id_number(&e.id, 'T').unwrap());
    let mut events: Vec<&EventAnnotation> = doc.events.iter().collect();
    events.sort_by_key(|e| id_number(&e.id, 'E').unwrap());

    let mut ann = String::new();
    for entity in entities {
        ann.push_str(&format!(
            "{}\t{} {}\t{}\n",
            entity.id, entity.label, entity.span, entity.surface
        ));
    }
    for event in &events {
        ann.push_str(&format!(
            "{}\t{}:{}",
            event.id, event.event_type, event.trigger
        ));
        for arg in &event.arguments {
            ann.push_str(&format!(" {}:{}", arg.role, arg.target));
        }
        ann.push('\n');
    }
    let mut attr_counter = 0;
    for event in &events {
        for (name, value) in &event.attributes {
            attr_counter += 1;
            if value.is_empty() {
                ann.push_str(&format!("A{attr_counter}\t{name} {}\n", event.id));
            } else {
                ann.push_str(&format!("A{attr_counter}\t{name} {} {value}\n", event.id));
            }
        }
    }
    Ok((doc.text.clone(), ann))
}

impl Document {
    /// Canonical form for structural comparison: entities sorted by
    /// `(span, label)` and renumbered `T1..`, events sorted by trigger
    /// position and renumbered `E1..`, arguments sorted by `(role, target)`.
    /// Two documents are structurally equal modulo id naming iff their
    /// canonical forms are equal.
    pub fn canonicalized(&self) -> Document {
        let mut order: Vec<usize> = (0..self.entities.len()).collect();
        order.sort_by(|&a, &b| {
            let ea = &self.entities[a];
            let eb = &self.entities[b];
            (&ea.span, &ea.label, &ea.id).cmp(&(&eb.span, &eb.label, &eb.id))
        });
        let mut rename: HashMap<&str, String> = HashMap::new();
        let mut entities = Vec::with_capacity(order.len());
        for (new_idx, &old_idx) in order.iter().enumerate() {
            let entity = &self.entities[old_idx];
            let new_id = format!("T{}", new_idx + 1);
            rename.insert(entity.id.as_str(), new_id.clone());
            entities.push(Entity {
                id: new_id,
                label: entity.label.clone(),
                span: entity.span.clone(),
                surface: entity.surface.clone(),
            });
        }
        let entity_key = |id: &str| {
            rename
                .get(id)
                .and_then(|new_id| id_number(new_id, 'T'))
                .unwrap_or(u64::MAX)
        };
        let mut events: Vec<EventAnnotation> = self
            .events
            .iter()
            .map(|event| {
                let mut arguments: Vec<Argument> = event
                    .arguments
                    .iter()
                    .map(|arg| Argument {
                        role: arg.role.clone(),
                        target: rename
                            .get(arg.target.as_str())
                            .cloned()
                            .unwrap_or_else(|| arg.target.clone()),
                    })
                    .collect();
                arguments.sort_by(|a, b| {
                    (&a.role, id_number(&a.target, 'T')).cmp(&(&b.role, id_number(&b.target, 'T')))
                });
                EventAnnotation {
                    id: event.id.clone(),
                    event_type: event.event_type.clone(),
                    trigger: rename
                        .get(event.trigger.as_str())
                        .cloned()
                        .unwrap_or_else(|| event.trigger.clone()),
                    arguments,
                    attributes: event.attributes.clone(),
                }
            })
            .collect();
        events.sort_by(|a, b| {
            (
                entity_key(&a.trigger),
                &a.event_type,
                &a.arguments,
                &a.attributes,
            )
                .cmp(&(
                    entity_key(&b.trigger),
                    &b.event_type,
                    &b.arguments,
                    &b.attributes,
                ))
        });
        for (idx, event) in events.iter_mut().enumerate() {
            event.id = format!("E{}", idx + 1);
        }
        Document {
            id: self.id.clone(),
            text: self.text.clone(),
            entities,
            events,
            metadata: self.metadata.clone(),
        }
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str, ann: &str) -> Document {
        parse_document(text, ann, "test").expect("parse")
    }

    #[test]
    fn minimal_document_parses() {
        let d = doc(
            "No scarring.",
            "T1\tMedical Problem 3 11\tscarring\nE1\tMedical Problem:T1\n",
        );
        assert_eq!(d.entities.len(), 1);
        assert_eq!(d.events.len(), 1);
        assert_eq!(d.events[0].event_type, "Medical Problem");
        assert_eq!(d.entities[0].surface, "scarring");
    }

    #[test]
    fn discontinuous_span_parses() {
        let text = "Bilateral apical lung zones";
        let d = doc(text, "T2\tAnatomy 0 9;17 21\tBilateral lung\n");
        assert_eq!(d.entities[0].span.fragments(), &[(0, 9), (17, 21)]);
        assert_eq!(d.entities[0].surface, "Bilateral lung");
    }

    #[test]
    fn dangling_trigger_reference_is_an_error() {
        let err = parse_document("text here", "E1\tLesion:T9\n", "d").unwrap_err();
        match err {
            ParseError::DanglingReference { id, .. } => assert_eq!(id, "T9"),
            other => panic!("expected dangling reference, got {other}"),
        }
    }

    #[test]
    fn offsets_count_characters_not_bytes() {
        // "±" is two bytes but one character.
        let text = "±1.2 cm mass";
        let d = doc(text, "T1\tSize 0 7\t±1.2 cm\n");
        assert_eq!(d.entities[0].surface, "±1.2 cm");
    }

    #[test]
    fn out_of_bounds_span_rejected() {
        let err = parse_document("short", "T1\tLesion 2 99\tort\n", "d").unwrap_err();
        assert!(matches!(err, ParseError::SpanOutOfBounds { .. }));
    }

    #[test]
    fn surface_mismatch_rejected() {
        let err = parse_document("No scarring.", "T1\tMedical Problem 3 11\twrong txt\n", "d")
            .unwrap_err();
        assert!(matches!(err, ParseError::SurfaceMismatch { .. }));
    }

    #[test]
    fn relation_lines_rejected_not_skipped() {
        let err = parse_document("abc def", "R1\tPart-of Arg1:T1 Arg2:T2\n", "d").unwrap_err();
        match err {
            ParseError::UnsupportedLine { prefix, .. } => assert_eq!(prefix, "R"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let d = doc(
            "No scarring.",
            "#comment\n\nT1\tMedical Problem 3 11\tscarring\n",
        );
        assert_eq!(d.entities.len(), 1);
    }

    #[test]
    fn attribute_on_event_and_trigger_normalize_identically() {
        let text = "No scarring.";
        let on_event = doc(
            text,
            "T1\tMedical Problem 3 11\tscarring\nE1\tMedical Problem:T1\nA1\tAssertion E1 absent\n",
        );
        let on_trigger = doc(
            text,
            "T1\tMedical Problem 3 11\tscarring\nE1\tMedical Problem:T1\nA1\tAssertion T1 absent\n",
        );
        assert_eq!(
            on_event.events[0].attributes,
            on_trigger.events[0].attributes
        );
        assert_eq!(
            on_event.events[0].attributes.get("Assertion").unwrap(),
            "absent"
        );
    }

    #[test]
    fn attribute_names_and_values_may_contain_spaces() {
        let text = "mass in the right lung";
        let d = doc(
            text,
            "T1\tLesion 0 4\tmass\nT2\tAnatomy 12 22\tright lung\n\
             E1\tLesion:T1 Anatomy:T2\nA1\tAnatomy Parent T2 Respiratory\nA2\tAnatomy Child T2 Lung\n",
        );
        let attrs = &d.events[0].attributes;
        assert_eq!(attrs.get("Anatomy Parent").unwrap(), "Respiratory");
        assert_eq!(attrs.get("Anatomy Child").unwrap(), "Lung");
    }

    #[test]
    fn event_roles_with_spaces_parse() {
        let text = "Staging for cancer";
        let d = doc(
            text,
            "T1\tIndication 12 18\tcancer\nT2\tIndication Type 0 7\tStaging\n\
             E1\tIndication:T1 Indication Type:T2\n",
        );
        assert_eq!(d.events[0].arguments[0].role, "Indication Type");
    }

    #[test]
    fn trigger_label_must_match_event_type() {
        let err = parse_document(
            "No scarring.",
            "T1\tLesion 3 11\tscarring\nE1\tMedical Problem:T1\n",
            "d",
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::TriggerTypeMismatch { .. }));
    }

    #[test]
    fn round_trip_preserves_document() {
        let ann = "T1\tMedical Problem 3 11\tscarring\nE1\tMedical Problem:T1\nA1\tAssertion E1 present\n";
        let d = doc("No scarring.", ann);
        let (text, ann2) = serialize_document(&d).expect("serialize");
        let d2 = parse_document(&text, &ann2, "test").expect("reparse");
        assert_eq!(d, d2);
    }

    #[test]
    fn empty_document_serializes_to_empty_ann() {
        let d = doc("Nothing to report.", "");
        let (_, ann) = serialize_document(&d).expect("serialize");
        assert_eq!(ann, "");
    }

    #[test]
    fn serialize_refuses_broken_surface() {
        let mut d = doc("No scarring.", "T1\tMedical Problem 3 11\tscarring\n");
        d.entities[0].surface = "tampered".to_owned();
        let err = serialize_document(&d).unwrap_err();
        let SerializeError::InvariantViolated { invariant, .. } = err;
        assert!(invariant.contains("surface"), "got: {invariant}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_document(
            "No scarring.",
            "T1\tMedical Problem 3 11\tscarring\nT1\tMedical Problem 3 11\tscarring\n",
            "d",
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::DuplicateId { .. }));
    }

    #[test]
    fn zero_length_fragment_rejected() {
        let err = parse_document("No scarring.", "T1\tMedical Problem 3 3\t\n", "d").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { .. }));
    }

    #[test]
    fn label_with_digits_parses() {
        let text = "the T12 right pedicle";
        let d = doc(text, "T1\tAnatomy 4 21\tT12 right pedicle\n");
        assert_eq!(d.entities[0].label, "Anatomy");
        assert_eq!(d.entities[0].surface, "T12 right pedicle");
    }

    #[test]
    fn canonicalized_is_stable_under_reordering() {
        let text = "mass in the right lung";
        let ann_a =
            "T1\tLesion 0 4\tmass\nT2\tAnatomy 12 22\tright lung\nE1\tLesion:T1 Anatomy:T2\n";
        let ann_b =
            "T5\tAnatomy 12 22\tright lung\nT9\tLesion 0 4\tmass\nE3\tLesion:T9 Anatomy:T5\n";
        let a = doc(text, ann_a).canonicalized();
        let b = doc(text, ann_b).canonicalized();
        assert_eq!(a, b);
    }
}
