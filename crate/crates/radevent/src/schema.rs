//! Event schema definition, loading, and document validation.
//!
//! The schema is data, not code: event types, argument roles, subtype
//! vocabularies, and the anatomy hierarchy all come from a JSON config so
//! that label-set corrections never require a rebuild. A default config is
//! compiled into the library; see [`Schema::builtin`].
//!
//! Role kinds:
//! * `span_only` — the argument is just a labeled span (e.g. Characteristic).
//! * `span_with_value` — the span additionally carries one normalized subtype
//!   value drawn from a fixed vocabulary (e.g. Assertion = present).
//!
//! The `Anatomy` role is special-cased by name: it carries *two* subtype
//! slots, `Anatomy Parent` and `Anatomy Child`, validated against the
//! config's parent→child hierarchy (each parent's child list must contain
//! `Undetermined`). Its vocabulary is the hierarchy's parent labels and is
//! auto-filled at load when left empty in the config.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::standoff::Document;

/// Attribute name carrying an anatomy span's parent label.
pub const ANATOMY_PARENT_ATTR: &str = "Anatomy Parent";
/// Attribute name carrying an anatomy span's child label.
pub const ANATOMY_CHILD_ATTR: &str = "Anatomy Child";
/// Role name that receives the two-slot anatomy treatment.
pub const ANATOMY_ROLE: &str = "Anatomy";
/// Child label every anatomy parent must offer.
pub const UNDETERMINED: &str = "Undetermined";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    SpanOnly,
    SpanWithValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDef {
    pub name: String,
    pub kind: RoleKind,
    #[serde(default)]
    pub required: bool,
    #[serde(default)]
    pub vocabulary: Vec<String>,
}

impl RoleDef {
    /// Attribute names this role contributes to an event's attribute map:
    /// none for span-only roles, `Anatomy Parent` + `Anatomy Child` for the
    /// anatomy role, the role's own name otherwise.
    pub fn subtype_slots(&self) -> Vec<&str> {
        match self.kind {
            RoleKind::SpanOnly => Vec::new(),
            RoleKind::SpanWithValue if self.name == ANATOMY_ROLE => {
                vec![ANATOMY_PARENT_ATTR, ANATOMY_CHILD_ATTR]
            }
            RoleKind::SpanWithValue => vec![self.name.as_str()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTypeDef {
    pub name: String,
    pub roles: Vec<RoleDef>,
}

impl EventTypeDef {
    pub fn role(&self, name: &str) -> Option<&RoleDef> {
        self.roles.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ParentDef {
    name: String,
    children: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnatomyHierarchy {
    parents: Vec<String>,
    children: BTreeMap<String, Vec<String>>,
}

impl AnatomyHierarchy {
    /// Parent labels in config order.
    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    /// Child labels of one parent, or `None` for an unknown parent.
    pub fn children_of(&self, parent: &str) -> Option<&[String]> {
        self.children.get(parent).map(|v| v.as_slice())
    }

    pub fn parent_count(&self) -> usize {
        self.parents.len()
    }

    /// Total child-label count, summed over parents. Each parent's
    /// `Undetermined` entry counts once, so the shipped 16-parent hierarchy
    /// with 55 distinct organ labels reports 71.
    pub fn child_count(&self) -> usize {
        self.children.values().map(|c| c.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    event_types: Vec<EventTypeDef>,
    anatomy: AnatomyHierarchy,
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("config syntax error: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("duplicate event type '{0}'")]
    DuplicateEventType(String),
    #[error("event type '{event_type}': duplicate role '{role}'")]
    DuplicateRole { event_type: String, role: String },
    #[error("event type '{event_type}': span_with_value role '{role}' has an empty vocabulary")]
    EmptyVocabulary { event_type: String, role: String },
    #[error("event type '{event_type}': span_only role '{role}' declares a vocabulary")]
    SpanOnlyWithVocabulary { event_type: String, role: String },
    #[error("event type '{event_type}': role '{role}' vocabulary must equal the anatomy hierarchy's {expected} labels")]
    AnatomyVocabularyMismatch {
        event_type: String,
        role: String,
        expected: &'static str,
    },
    #[error("duplicate anatomy parent '{0}'")]
    DuplicateParent(String),
    #[error("anatomy parent '{parent}': duplicate child '{child}'")]
    DuplicateChild { parent: String, child: String },
    #[error("anatomy parent '{0}' does not include the required '{UNDETERMINED}' child")]
    MissingUndetermined(String),
}

#[derive(Debug, Deserialize)]
struct RawConfig {
    event_types: Vec<EventTypeDef>,
    anatomy: RawAnatomy,
}

#[derive(Debug, Deserialize)]
struct RawAnatomy {
    parents: Vec<ParentDef>,
}

/// Parses and self-validates a schema config (JSON with top-level keys
/// `event_types` and `anatomy`; unknown keys such as `comment` are ignored).
pub fn load_schema(config_content: &str) -> Result<Schema, SchemaError> {
    let raw: RawConfig = serde_json::from_str(config_content)?;

    let mut parents = Vec::new();
    let mut children = BTreeMap::new();
    for parent in raw.anatomy.parents {
        if children.contains_key(&parent.name) {
            return Err(SchemaError::DuplicateParent(parent.name));
        }
        let mut seen = BTreeSet::new();
        for child in &parent.children {
            if !seen.insert(child.as_str()) {
                return Err(SchemaError::DuplicateChild {
                    parent: parent.name.clone(),
                    child: child.clone(),
                });
            }
        }
        if !seen.contains(UNDETERMINED) {
            return Err(SchemaError::MissingUndetermined(parent.name));
        }
        parents.push(parent.name.clone());
        children.insert(parent.name, parent.children);
    }
    let anatomy = AnatomyHierarchy { parents, children };

    let all_children: BTreeSet<&str> = anatomy
        .children
        .values()
        .flatten()
        .map(String::as_str)
        .collect();
    let parent_set: BTreeSet<&str> = anatomy.parents.iter().map(String::as_str).collect();

    let mut event_types = raw.event_types;
    let mut type_names = BTreeSet::new();
    for event_type in &mut event_types {
        if !type_names.insert(event_type.name.clone()) {
            return Err(SchemaError::DuplicateEventType(event_type.name.clone()));
        }
        let mut role_names = BTreeSet::new();
        for role in &mut event_type.roles {
            if !role_names.insert(role.name.clone()) {
                return Err(SchemaError::DuplicateRole {
                    event_type: event_type.name.clone(),
                    role: role.name.clone(),
                });
            }
            let vocab_set: BTreeSet<&str> = role.vocabulary.iter().map(String::as_str).collect();
            match role.kind {
                RoleKind::SpanOnly => {
                    if !role.vocabulary.is_empty() {
                        return Err(SchemaError::SpanOnlyWithVocabulary {
                            event_type: event_type.name.clone(),
                            role: role.name.clone(),
                        });
                    }
                }
                RoleKind::SpanWithValue => {
                    // The hierarchy is authoritative for anatomy label sets:
                    // an empty vocabulary is auto-filled, a non-empty one
                    // must agree with the hierarchy exactly.
                    if role.name == ANATOMY_ROLE || role.name == ANATOMY_PARENT_ATTR {
                        if role.vocabulary.is_empty() {
                            role.vocabulary = anatomy.parents.clone();
                        } else if vocab_set != parent_set {
                            return Err(SchemaError::AnatomyVocabularyMismatch {
                                event_type: event_type.name.clone(),
                                role: role.name.clone(),
                                expected: "parent",
                            });
                        }
                    } else if role.name == ANATOMY_CHILD_ATTR {
                        if role.vocabulary.is_empty() {
                            role.vocabulary = all_children.iter().map(|s| s.to_string()).collect();
                        } else if vocab_set != all_children {
                            return Err(SchemaError::AnatomyVocabularyMismatch {
                                event_type: event_type.name.clone(),
                                role: role.name.clone(),
                                expected: "child",
                            });
                        }
                    }
                    if role.vocabulary.is_empty() {
                        return Err(SchemaError::EmptyVocabulary {
                            event_type: event_type.name.clone(),
                            role: role.name.clone(),
                        });
                    }
                }
            }
        }
    }

    Ok(Schema {
        event_types,
        anatomy,
    })
}

impl Schema {
    /// The compiled-in default schema: three event types plus the 16-parent /
    /// 71-child anatomy hierarchy.
    pub fn builtin() -> Schema {
        load_schema(include_str!("../schema/default.json"))
            .expect("compiled-in default schema must be valid")
    }

    pub fn event_types(&self) -> &[EventTypeDef] {
        &self.event_types
    }

    pub fn event_type(&self, name: &str) -> Option<&EventTypeDef> {
        self.event_types.iter().find(|t| t.name == name)
    }

    pub fn anatomy(&self) -> &AnatomyHierarchy {
        &self.anatomy
    }
}

/// Machine-matchable names for the document validation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    UnknownEventType,
    TriggerLabelMismatch,
    DanglingReference,
    UnknownRole,
    RequiredRoleAbsent,
    SubtypeMissing,
    SubtypeNotInVocabulary,
    ChildNotUnderParent,
    SubtypeOnSpanOnlyRole,
    UnknownAttribute,
}

impl fmt::Display for Rule {
    /// Prints the same snake_case token the JSON form uses, so text and JSON
    /// reports can be grepped with one pattern.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rule::UnknownEventType => "unknown_event_type",
            Rule::TriggerLabelMismatch => "trigger_label_mismatch",
            Rule::DanglingReference => "dangling_reference",
            Rule::UnknownRole => "unknown_role",
            Rule::RequiredRoleAbsent => "required_role_absent",
            Rule::SubtypeMissing => "subtype_missing",
            Rule::SubtypeNotInVocabulary => "subtype_not_in_vocabulary",
            Rule::ChildNotUnderParent => "child_not_under_parent",
            Rule::SubtypeOnSpanOnlyRole => "subtype_on_span_only_role",
            Rule::UnknownAttribute => "unknown_attribute",
        };
        write!(f, "{name}")
    }
}

/// One schema-conformance finding. Violations are data, not errors: a
/// validation pass returns all of them at once.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub doc_id: String,
    pub annotation_id: String,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.doc_id, self.annotation_id, self.rule, self.message
        )
    }
}

/// Checks one document against the schema. Returns a sorted list of
/// violations; an empty list means the document conforms. Deterministic and
/// order-independent: permuting the document's annotation lists yields the
/// same violation set.
pub fn validate_document(schema: &Schema, doc: &Document) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut push = |annotation_id: &str, rule: Rule, message: String| {
        violations.push(Violation {
            doc_id: doc.id.clone(),
            annotation_id: annotation_id.to_owned(),
            rule,
            message,
        });
    };

    for event in &doc.events {
        let type_def = match schema.event_type(&event.event_type) {
            Some(def) => def,
            None => {
                push(
                    &event.id,
                    Rule::UnknownEventType,
                    format!("event type '{}' is not in the schema", event.event_type),
                );
                continue;
            }
        };

        match doc.entity(&event.trigger) {
            Some(trigger) => {
                if trigger.label != event.event_type {
                    push(
                        &event.id,
                        Rule::TriggerLabelMismatch,
                        format!(
                            "trigger {} is labeled '{}' but the event type is '{}'",
                            event.trigger, trigger.label, event.event_type
                        ),
                    );
                }
            }
            None => push(
                &event.id,
                Rule::DanglingReference,
                format!("trigger {} does not resolve to an entity", event.trigger),
            ),
        }

        let mut roles_present: BTreeSet<&str> = BTreeSet::new();
        for arg in &event.arguments {
            if doc.entity(&arg.target).is_none() {
                push(
                    &event.id,
                    Rule::DanglingReference,
                    format!(
                        "argument target {} does not resolve to an entity",
                        arg.target
                    ),
                );
            }
            let role_def = match type_def.role(&arg.role) {
                Some(def) => def,
                None => {
                    push(
                        &event.id,
                        Rule::UnknownRole,
                        format!(
                            "role '{}' is not allowed on event type '{}'",
                            arg.role, event.event_type
                        ),
                    );
                    continue;
                }
            };
            roles_present.insert(role_def.name.as_str());

            // Every slot the role defines must be filled with an in-vocabulary
            // value; anatomy children are additionally checked against the
            // hierarchy under their declared parent.
            if role_def.name == ANATOMY_ROLE && role_def.kind == RoleKind::SpanWithValue {
                let parent = event.attributes.get(ANATOMY_PARENT_ATTR);
                let child = event.attributes.get(ANATOMY_CHILD_ATTR);
                let valid_parent = match parent {
                    None => {
                        push(
                            &event.id,
                            Rule::SubtypeMissing,
                            format!(
                                "anatomy argument {} has no '{ANATOMY_PARENT_ATTR}' value",
                                arg.target
                            ),
                        );
                        None
                    }
                    Some(p) if schema.anatomy().children_of(p).is_none() => {
                        push(
                            &event.id,
                            Rule::SubtypeNotInVocabulary,
                            format!("'{p}' is not an anatomy parent label"),
                        );
                        None
                    }
                    Some(p) => Some(p),
                };
                match child {
                    None => push(
                        &event.id,
                        Rule::SubtypeMissing,
                        format!(
                            "anatomy argument {} has no '{ANATOMY_CHILD_ATTR}' value",
                            arg.target
                        ),
                    ),
                    Some(c) => {
                        // Judge the child only once the parent is known-good;
                        // otherwise the parent violation already tells the story.
                        if let Some(p) = valid_parent {
                            let children = schema.anatomy().children_of(p).unwrap();
                            if !children.iter().any(|x| x == c) {
                                push(
                                    &event.id,
                                    Rule::ChildNotUnderParent,
                                    format!("child '{c}' is not under parent '{p}'"),
                                );
                            }
                        }
                    }
                }
            } else if role_def.kind == RoleKind::SpanWithValue {
                match event.attributes.get(&role_def.name) {
                    None => push(
                        &event.id,
                        Rule::SubtypeMissing,
                        format!("no '{}' subtype value on the event", role_def.name),
                    ),
                    Some(value) => {
                        if !role_def.vocabulary.iter().any(|v| v == value) {
                            push(
                                &event.id,
                                Rule::SubtypeNotInVocabulary,
                                format!(
                                    "'{}' is not in the '{}' vocabulary {:?}",
                                    value, role_def.name, role_def.vocabulary
                                ),
                            );
                        }
                    }
                }
            }
        }

        for role_def in &type_def.roles {
            if role_def.required && !roles_present.contains(role_def.name.as_str()) {
                push(
                    &event.id,
                    Rule::RequiredRoleAbsent,
                    format!(
                        "event type '{}' requires a '{}' argument",
                        event.event_type, role_def.name
                    ),
                );
            }
        }

        // Attribute keys must correspond to a subtype slot of some role of
        // this event type, and never to a span-only role.
        let mut slot_owner: BTreeMap<&str, RoleKind> = BTreeMap::new();
        for role_def in &type_def.roles {
            for slot in role_def.subtype_slots() {
                slot_owner.insert(slot, role_def.kind);
            }
            if role_def.kind == RoleKind::SpanOnly {
                slot_owner
                    .entry(role_def.name.as_str())
                    .or_insert(RoleKind::SpanOnly);
            }
        }
        for key in event.attributes.keys() {
            match slot_owner.get(key.as_str()) {
                Some(RoleKind::SpanOnly) => push(
                    &event.id,
                    Rule::SubtypeOnSpanOnlyRole,
                    format!("span-only role '{key}' cannot carry a subtype value"),
                ),
                Some(RoleKind::SpanWithValue) => {}
                None => push(
                    &event.id,
                    Rule::UnknownAttribute,
                    format!(
                        "attribute '{key}' matches no subtype slot of event type '{}'",
                        event.event_type
                    ),
                ),
            }
        }
    }

    violations.sort();
    violations.dedup();
    violations
}

/// Validates every document, concatenating the findings.
pub fn validate_corpus(schema: &Schema, docs: &[Document]) -> Vec<Violation> {
    let mut violations: Vec<Violation> = docs
        .iter()
        .flat_map(|doc| validate_document(schema, doc))
        .collect();
    violations.sort();
    violations
}
