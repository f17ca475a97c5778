//! Conversion between the event view (trigger + arguments) and the flat
//! entity/relation view used by span-extraction systems.
//!
//! In the flat view every event becomes its trigger entity; each argument
//! becomes one relation whose head is the trigger entity and whose tail is
//! the argument entity. Subtype values ride on the argument's tail entity;
//! values whose role has no argument span in the event ride on the trigger.
//! Arguments shared by several events stay a single entity with multiple
//! inbound relations.
//!
//! The flat view also defines the JSON interchange form read and written by
//! the CLI `convert` subcommand, for systems that do not speak standoff.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::Schema;
use crate::standoff::{
    surface_at, Argument, Document, Entity, EventAnnotation, Metadata, TextSpan,
};

/// One entity of the flat view: a labeled span plus the subtype values
/// attached to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewEntity {
    pub id: String,
    pub label: String,
    pub span: TextSpan,
    pub surface: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub subtypes: BTreeMap<String, String>,
}

/// One directed relation: `head` is a trigger entity, `tail` the argument
/// entity it characterizes, `role` the argument role name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub head: String,
    pub tail: String,
    pub role: String,
}

/// A document's annotations flattened to entities and relations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRelationView {
    pub entities: Vec<ViewEntity>,
    pub relations: Vec<Relation>,
}

/// The JSON interchange form: one document's text, metadata, and flat view.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonDocument {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub metadata: Metadata,
    #[serde(flatten)]
    pub view: EntityRelationView,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate entity id {0}")]
    DuplicateEntityId(String),
    #[error("reference to unknown entity id {0}")]
    DanglingReference(String),
    #[error("events {0} and {1} share trigger entity {2}; the flat view cannot represent this")]
    SharedTrigger(String, String, String),
    #[error("duplicate relation ({head}, {tail}, {role})")]
    DuplicateRelation {
        head: String,
        tail: String,
        role: String,
    },
    #[error("relation head {id} has label '{label}', which is not an event type")]
    NonTriggerHead { id: String, label: String },
    #[error("conflicting '{key}' subtype values on entity {entity}")]
    ConflictingSubtype { entity: String, key: String },
    #[error("entity {id} span {span} does not fit the text")]
    SpanOutOfBounds { id: String, span: String },
    #[error("entity {id} surface {declared:?} does not match the text at its span")]
    SurfaceMismatch { id: String, declared: String },
}

fn set_subtype(
    subtypes: &mut BTreeMap<String, String>,
    entity_id: &str,
    key: &str,
    value: &str,
) -> Result<(), GraphError> {
    match subtypes.get(key) {
        Some(existing) if existing != value => Err(GraphError::ConflictingSubtype {
            entity: entity_id.to_owned(),
            key: key.to_owned(),
        }),
        _ => {
            subtypes.insert(key.to_owned(), value.to_owned());
            Ok(())
        }
    }
}

/// Flattens a document's events into entities and relations. Every document
/// entity is carried through (orphan entities included); each event argument
/// becomes one relation, so the relation count equals the total argument
/// count.
pub fn decompose(doc: &Document, schema: &Schema) -> Result<EntityRelationView, GraphError> {
    let mut entity_order: Vec<&Entity> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for entity in &doc.entities {
        if index
            .insert(entity.id.as_str(), entity_order.len())
            .is_some()
        {
            return Err(GraphError::DuplicateEntityId(entity.id.clone()));
        }
        entity_order.push(entity);
    }

    let mut subtypes: Vec<BTreeMap<String, String>> = vec![BTreeMap::new(); entity_order.len()];
    let mut relations: Vec<Relation> = Vec::new();
    let mut trigger_owner: HashMap<&str, &str> = HashMap::new();

    for event in &doc.events {
        let trigger_idx = *index
            .get(event.trigger.as_str())
            .ok_or_else(|| GraphError::DanglingReference(event.trigger.clone()))?;
        if let Some(prev) = trigger_owner.insert(event.trigger.as_str(), event.id.as_str()) {
            return Err(GraphError::SharedTrigger(
                prev.to_owned(),
                event.id.clone(),
                event.trigger.clone(),
            ));
        }

        let mut tails_by_role: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for arg in &event.arguments {
            let tail_idx = *index
                .get(arg.target.as_str())
                .ok_or_else(|| GraphError::DanglingReference(arg.target.clone()))?;
            let relation = Relation {
                head: event.trigger.clone(),
                tail: arg.target.clone(),
                role: arg.role.clone(),
            };
            if relations.contains(&relation) {
                return Err(GraphError::DuplicateRelation {
                    head: relation.head,
                    tail: relation.tail,
                    role: relation.role,
                });
            }
            relations.push(relation);
            tails_by_role
                .entry(arg.role.as_str())
                .or_default()
                .push(tail_idx);
        }

        // Each subtype value lands on the entity that carries it in the flat
        // view: the matching argument's tail, or the trigger when the event
        // has no argument for that slot's role.
        for (key, value) in &event.attributes {
            let owning_role = schema.event_type(&event.event_type).and_then(|type_def| {
                type_def
                    .roles
                    .iter()
                    .find(|role| role.subtype_slots().contains(&key.as_str()))
                    .map(|role| role.name.as_str())
            });
            let targets: Vec<usize> = match owning_role.and_then(|role| tails_by_role.get(role)) {
                Some(tails) => tails.clone(),
                None => vec![trigger_idx],
            };
            for target in targets {
                set_subtype(&mut subtypes[target], &entity_order[target].id, key, value)?;
            }
        }
    }

    let entities = entity_order
        .iter()
        .zip(subtypes)
        .map(|(entity, subtypes)| ViewEntity {
            id: entity.id.clone(),
            label: entity.label.clone(),
            span: entity.span.clone(),
            surface: entity.surface.clone(),
            subtypes,
        })
        .collect();
    Ok(EntityRelationView {
        entities,
        relations,
    })
}

/// Rebuilds an event-view document from a flat view. Every entity whose
/// label is an event type becomes an event (with no arguments if it heads no
/// relation); relation roles become event arguments; entity subtypes are
/// gathered back onto the owning events. Entity ids are kept when they
/// already form a unique `T<number>` set and are renumbered otherwise.
pub fn recompose(
    view: &EntityRelationView,
    doc_text: &str,
    doc_id: &str,
    schema: &Schema,
) -> Result<Document, GraphError> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, entity) in view.entities.iter().enumerate() {
        if index.insert(entity.id.as_str(), i).is_some() {
            return Err(GraphError::DuplicateEntityId(entity.id.clone()));
        }
        match surface_at(doc_text, &entity.span) {
            None => {
                return Err(GraphError::SpanOutOfBounds {
                    id: entity.id.clone(),
                    span: entity.span.to_string(),
                })
            }
            Some(actual) if actual != entity.surface => {
                return Err(GraphError::SurfaceMismatch {
                    id: entity.id.clone(),
                    declared: entity.surface.clone(),
                })
            }
            Some(_) => {}
        }
    }

    let keep_ids = view.entities.iter().all(|entity| {
        entity
            .id
            .strip_prefix('T')
            .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
    });
    let entity_id = |i: usize| -> String {
        if keep_ids {
            view.entities[i].id.clone()
        } else {
            format!("T{}", i + 1)
        }
    };

    let mut seen_relations: Vec<(&str, &str, &str)> = Vec::new();
    let mut args_by_head: BTreeMap<usize, Vec<&Relation>> = BTreeMap::new();
    for relation in &view.relations {
        let head_idx = *index
            .get(relation.head.as_str())
            .ok_or_else(|| GraphError::DanglingReference(relation.head.clone()))?;
        if !index.contains_key(relation.tail.as_str()) {
            return Err(GraphError::DanglingReference(relation.tail.clone()));
        }
        let head = &view.entities[head_idx];
        if schema.event_type(&head.label).is_none() {
            return Err(GraphError::NonTriggerHead {
                id: head.id.clone(),
                label: head.label.clone(),
            });
        }
        let key = (
            relation.head.as_str(),
            relation.tail.as_str(),
            relation.role.as_str(),
        );
        if seen_relations.contains(&key) {
            return Err(GraphError::DuplicateRelation {
                head: relation.head.clone(),
                tail: relation.tail.clone(),
                role: relation.role.clone(),
            });
        }
        seen_relations.push(key);
        args_by_head.entry(head_idx).or_default().push(relation);
    }

    let entities: Vec<Entity> = view
        .entities
        .iter()
        .enumerate()
        .map(|(i, entity)| Entity {
            id: entity_id(i),
            label: entity.label.clone(),
            span: entity.span.clone(),
            surface: entity.surface.clone(),
        })
        .collect();

    let mut events: Vec<EventAnnotation> = Vec::new();
    for (i, trigger) in view.entities.iter().enumerate() {
        if schema.event_type(&trigger.label).is_none() {
            continue;
        }
        let mut attributes = BTreeMap::new();
        for (key, value) in &trigger.subtypes {
            set_subtype(&mut attributes, &trigger.id, key, value)?;
        }
        let mut arguments = Vec::new();
        for relation in args_by_head.get(&i).map(Vec::as_slice).unwrap_or(&[]) {
            let tail_idx = index[relation.tail.as_str()];
            let tail = &view.entities[tail_idx];
            arguments.push(Argument {
                role: relation.role.clone(),
                target: entity_id(tail_idx),
            });
            for (key, value) in &tail.subtypes {
                set_subtype(&mut attributes, &tail.id, key, value)?;
            }
        }
        events.push(EventAnnotation {
            id: format!("E{}", events.len() + 1),
            event_type: trigger.label.clone(),
            trigger: entity_id(i),
            arguments,
            attributes,
        });
    }

    Ok(Document {
        id: doc_id.to_owned(),
        text: doc_text.to_owned(),
        entities,
        events,
        metadata: Metadata::default(),
    })
}

/// Document → interchange form.
pub fn to_json_document(doc: &Document, schema: &Schema) -> Result<JsonDocument, GraphError> {
    Ok(JsonDocument {
        id: doc.id.clone(),
        text: doc.text.clone(),
        metadata: doc.metadata.clone(),
        view: decompose(doc, schema)?,
    })
}

/// Interchange form → document.
pub fn from_json_document(json: &JsonDocument, schema: &Schema) -> Result<Document, GraphError> {
    let mut doc = recompose(&json.view, &json.text, &json.id, schema)?;
    doc.metadata = json.metadata.clone();
    Ok(doc)
}
