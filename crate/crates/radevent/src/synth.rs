//! Deterministic synthetic report generator.
//!
//! Produces schema-conformant documents that look like terse radiology
//! reports. Structural guarantees the test tooling depends on:
//!
//! - every sentence hosts at most one event, and all of that event's spans
//!   (trigger and arguments) lie inside the sentence;
//! - an event carries at most one argument per role;
//! - filler sentences carry no annotations at all;
//! - no span contains a `.` character, so sentence boundaries can be
//!   recovered from the text alone;
//! - output is a pure function of `(schema, n_docs, seed)`.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schema::{
    EventTypeDef, RoleDef, RoleKind, Schema, ANATOMY_CHILD_ATTR, ANATOMY_PARENT_ATTR, ANATOMY_ROLE,
    UNDETERMINED,
};
use crate::standoff::{Argument, Document, Entity, EventAnnotation, Metadata, Modality, TextSpan};

/// Incremental document assembly with character-offset bookkeeping.
struct DocBuilder {
    text: String,
    char_len: usize,
    entities: Vec<Entity>,
    events: Vec<EventAnnotation>,
}

impl DocBuilder {
    fn new() -> Self {
        DocBuilder {
            text: String::new(),
            char_len: 0,
            entities: Vec::new(),
            events: Vec::new(),
        }
    }

    fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.char_len += s.chars().count();
    }

    /// Appends `surface` to the text and records a contiguous entity over it.
    fn entity(&mut self, label: &str, surface: &str) -> String {
        let start = self.char_len;
        self.push(surface);
        let span = TextSpan::contiguous(start, self.char_len).expect("non-empty surface");
        let id = format!("T{}", self.entities.len() + 1);
        self.entities.push(Entity {
            id: id.clone(),
            label: label.to_owned(),
            span,
            surface: surface.to_owned(),
        });
        id
    }

    /// Appends `parts` interleaved with `joiners` (starting with a part) and
    /// records a discontinuous entity whose fragments are exactly the parts.
    /// `joiners` must have one fewer element than `parts`.
    fn entity_fragments(&mut self, label: &str, parts: &[&str], joiners: &[&str]) -> String {
        assert_eq!(parts.len(), joiners.len() + 1);
        let mut fragments = Vec::new();
        for (i, part) in parts.iter().enumerate() {
            let start = self.char_len;
            self.push(part);
            fragments.push((start, self.char_len));
            if let Some(joiner) = joiners.get(i) {
                self.push(joiner);
            }
        }
        let span = TextSpan::new(fragments).expect("sorted non-empty fragments");
        let id = format!("T{}", self.entities.len() + 1);
        self.entities.push(Entity {
            id: id.clone(),
            label: label.to_owned(),
            span,
            surface: parts.join(" "),
        });
        id
    }

    fn event(
        &mut self,
        event_type: &str,
        trigger: String,
        arguments: Vec<Argument>,
        attributes: BTreeMap<String, String>,
    ) {
        let id = format!("E{}", self.events.len() + 1);
        self.events.push(EventAnnotation {
            id,
            event_type: event_type.to_owned(),
            trigger,
            arguments,
            attributes,
        });
    }
}

fn trigger_words(event_type: &str) -> &'static [&'static str] {
    match event_type {
        "Indication" => &["carcinoma", "lymphoma", "melanoma", "malignancy"],
        "Lesion" => &["mass", "lesion", "nodule", "cyst", "opacity"],
        "Medical Problem" => &[
            "atelectasis",
            "effusion",
            "scarring",
            "edema",
            "emphysema",
            "cholelithiasis",
        ],
        _ => &[],
    }
}

fn characteristic_words() -> &'static [&'static str] {
    &[
        "hypodense",
        "calcified",
        "cystic",
        "enhancing",
        "ill-defined",
        "spiculated",
    ]
}

fn count_words() -> &'static [&'static str] {
    &["two", "three", "multiple", "several", "innumerable"]
}

/// A span phrase tied to an assertion value; the value is what the subtype
/// records, the word is what appears in the text.
fn assertion_cue(value: &str) -> &'static str {
    match value {
        "present" => "demonstrates",
        "absent" => "No",
        "possible" => "Questionable",
        _ => "shows",
    }
}

fn trend_word(value: &str, rng: &mut ChaCha8Rng) -> String {
    let options: &[&str] = match value {
        "new" => &["new", "newly apparent"],
        "increasing" => &["enlarging", "increased in size"],
        "decreasing" => &["smaller", "decreased in size"],
        "stable" => &["stable", "unchanged"],
        _ => return value.to_owned(),
    };
    (*options.choose(rng).unwrap()).to_owned()
}

fn filler_sentences() -> &'static [&'static str] {
    &[
        "Comparison is made with the prior examination",
        "Technique and image quality are adequate",
        "The remainder of the examination is unremarkable",
        "Clinical correlation is recommended",
        "Attenuation values were measured on the portal venous phase",
    ]
}

/// Size surface without any `.` so sentence splitting on periods stays safe;
/// roughly half use the multiplication sign.
fn size_surface(rng: &mut ChaCha8Rng) -> String {
    if rng.random_bool(0.5) {
        format!(
            "{} × {} mm",
            rng.random_range(4..40),
            rng.random_range(4..40)
        )
    } else {
        format!("{} mm", rng.random_range(3..30))
    }
}

struct AnatomyPick {
    parent: String,
    child: String,
}

fn pick_anatomy(schema: &Schema, rng: &mut ChaCha8Rng) -> Option<AnatomyPick> {
    let parents = schema.anatomy().parents();
    let parent = parents.choose(rng)?.clone();
    let children = schema.anatomy().children_of(&parent)?;
    let child = children.choose(rng)?.clone();
    Some(AnatomyPick { parent, child })
}

/// The organ words written into the text for an anatomy pick. The surface is
/// intentionally not always the child label verbatim: normalization from
/// free text to the vocabulary is part of what the schema models.
fn anatomy_words(pick: &AnatomyPick) -> String {
    if pick.child == UNDETERMINED {
        format!("{} region", pick.parent.to_lowercase())
    } else {
        pick.child.to_lowercase()
    }
}

/// State for one event sentence under construction.
struct SentencePlan {
    arguments: Vec<Argument>,
    attributes: BTreeMap<String, String>,
}

fn add_anatomy(
    builder: &mut DocBuilder,
    plan: &mut SentencePlan,
    schema: &Schema,
    rng: &mut ChaCha8Rng,
) -> bool {
    let Some(pick) = pick_anatomy(schema, rng) else {
        return false;
    };
    let organ = anatomy_words(&pick);
    builder.push("the ");
    let target = if pick.child != UNDETERMINED && !organ.contains(' ') && rng.random_bool(0.12) {
        // Discontinuous span: "bilateral basal lung zones" annotates
        // "bilateral" + "lung".
        builder.entity_fragments(ANATOMY_ROLE, &["bilateral", &organ], &[" basal "])
    } else {
        let sided = match rng.random_range(0..4) {
            0 => format!("right {organ}"),
            1 => format!("left {organ}"),
            _ => organ,
        };
        builder.entity(ANATOMY_ROLE, &sided)
    };
    plan.arguments.push(Argument {
        role: ANATOMY_ROLE.to_owned(),
        target,
    });
    plan.attributes
        .insert(ANATOMY_PARENT_ATTR.to_owned(), pick.parent);
    plan.attributes
        .insert(ANATOMY_CHILD_ATTR.to_owned(), pick.child);
    true
}

fn pick_value<'a>(role: &'a RoleDef, rng: &mut ChaCha8Rng) -> &'a str {
    role.vocabulary
        .choose(rng)
        .map(String::as_str)
        .unwrap_or("unspecified")
}

/// Emits one full sentence (ending in `.`) hosting exactly one event of
/// `type_def`, then records the event.
fn event_sentence(
    builder: &mut DocBuilder,
    schema: &Schema,
    type_def: &EventTypeDef,
    rng: &mut ChaCha8Rng,
) {
    let mut plan = SentencePlan {
        arguments: Vec::new(),
        attributes: BTreeMap::new(),
    };

    // Decide which roles participate: required ones always, the rest by coin.
    let mut use_role: BTreeMap<&str, bool> = BTreeMap::new();
    for role in &type_def.roles {
        let keep = role.required || rng.random_bool(0.55);
        use_role.insert(role.name.as_str(), keep);
    }

    let assertion_role = type_def
        .role("Assertion")
        .filter(|_| use_role.get("Assertion").copied().unwrap_or(false));
    let assertion_value = assertion_role.map(|role| {
        let value = if role.vocabulary.iter().any(|v| v == "present") {
            // Weight towards affirmed findings like real reports.
            let roll = rng.random_range(0..10);
            if roll < 7 {
                "present"
            } else if roll < 9 && role.vocabulary.iter().any(|v| v == "absent") {
                "absent"
            } else if role.vocabulary.iter().any(|v| v == "possible") {
                "possible"
            } else {
                "present"
            }
        } else {
            pick_value(role, rng)
        };
        value.to_owned()
    });

    let negated = matches!(
        assertion_value.as_deref(),
        Some("absent") | Some("possible")
    );

    let trigger_word: String = {
        let words = trigger_words(&type_def.name);
        if words.is_empty() {
            type_def.name.to_lowercase()
        } else {
            (*words.choose(rng).unwrap()).to_owned()
        }
    };

    // Sentence openings depend on the assertion.
    let mut anatomy_used = false;
    match assertion_value.as_deref() {
        Some(value @ ("absent" | "possible")) => {
            // "No focal mass in the liver." / "Questionable nodule ..."
            let cue = builder.entity("Assertion", assertion_cue(value));
            plan.arguments.push(Argument {
                role: "Assertion".to_owned(),
                target: cue,
            });
            plan.attributes
                .insert("Assertion".to_owned(), value.to_owned());
            builder.push(" ");
        }
        Some(value) => {
            // "The liver demonstrates a ..." — anatomy first when available.
            if use_role.get(ANATOMY_ROLE).copied().unwrap_or(false)
                && type_def.role(ANATOMY_ROLE).is_some()
            {
                builder.push("The ");
                // add_anatomy pushes its own "the "; emit manually instead.
                let pick = pick_anatomy(schema, rng);
                if let Some(pick) = pick {
                    let organ = anatomy_words(&pick);
                    let target = builder.entity(ANATOMY_ROLE, &organ);
                    plan.arguments.push(Argument {
                        role: ANATOMY_ROLE.to_owned(),
                        target,
                    });
                    plan.attributes
                        .insert(ANATOMY_PARENT_ATTR.to_owned(), pick.parent);
                    plan.attributes
                        .insert(ANATOMY_CHILD_ATTR.to_owned(), pick.child);
                    anatomy_used = true;
                    builder.push(" ");
                }
            } else {
                builder.push("Imaging ");
            }
            if !anatomy_used && !builder.text.ends_with("Imaging ") {
                builder.push("study ");
            }
            let cue = builder.entity("Assertion", assertion_cue(value));
            plan.arguments.push(Argument {
                role: "Assertion".to_owned(),
                target: cue,
            });
            plan.attributes
                .insert("Assertion".to_owned(), value.to_owned());
            let counted = type_def.role("Count").is_some() && use_role["Count"];
            builder.push(if counted { " " } else { " a " });
        }
        None => {
            builder.push("Evaluation of ");
        }
    }

    // Count and characteristic qualify the trigger noun.
    if !negated {
        if let Some(role) = type_def.role("Count") {
            if use_role["Count"] && role.kind == RoleKind::SpanOnly {
                let word = *count_words().choose(rng).unwrap();
                let target = builder.entity("Count", word);
                plan.arguments.push(Argument {
                    role: "Count".to_owned(),
                    target,
                });
                builder.push(" ");
            }
        }
    }
    if let Some(role) = type_def.role("Characteristic") {
        if use_role["Characteristic"] && role.kind == RoleKind::SpanOnly {
            let word = *characteristic_words().choose(rng).unwrap();
            let target = builder.entity("Characteristic", word);
            plan.arguments.push(Argument {
                role: "Characteristic".to_owned(),
                target,
            });
            builder.push(" ");
        }
    }

    let trigger = builder.entity(&type_def.name, &trigger_word);

    // Post-trigger clauses.
    if !negated {
        if let Some(role) = type_def.role("Size") {
            if use_role["Size"] && role.kind == RoleKind::SpanOnly {
                builder.push(" measuring ");
                let surface = size_surface(rng);
                let target = builder.entity("Size", &surface);
                plan.arguments.push(Argument {
                    role: "Size".to_owned(),
                    target,
                });
            }
        }
    }
    if !anatomy_used
        && type_def.role(ANATOMY_ROLE).is_some()
        && use_role.get(ANATOMY_ROLE).copied().unwrap_or(false)
    {
        builder.push(" in ");
        add_anatomy(builder, &mut plan, schema, rng);
    }
    if !negated {
        if let Some(role) = type_def.role("Size Trend") {
            if use_role["Size Trend"] && role.kind == RoleKind::SpanWithValue {
                let value = pick_value(role, rng).to_owned();
                let surface = trend_word(&value, rng);
                builder.push(", ");
                let target = builder.entity("Size Trend", &surface);
                plan.arguments.push(Argument {
                    role: "Size Trend".to_owned(),
                    target,
                });
                plan.attributes.insert("Size Trend".to_owned(), value);
            }
        }
    }
    if let Some(role) = type_def.role("Indication Type") {
        if use_role["Indication Type"] && role.kind == RoleKind::SpanWithValue {
            let value = pick_value(role, rng).to_owned();
            builder.push(" for ");
            let target = builder.entity("Indication Type", &value);
            plan.arguments.push(Argument {
                role: "Indication Type".to_owned(),
                target,
            });
            plan.attributes.insert("Indication Type".to_owned(), value);
        }
    }

    // Any other roles the schema defines that this generator has no phrase
    // pattern for: generic "with <word>" clauses keep arbitrary schemas
    // working.
    let handled = [
        ANATOMY_ROLE,
        "Assertion",
        "Characteristic",
        "Size",
        "Size Trend",
        "Count",
        "Indication Type",
    ];
    for role in &type_def.roles {
        if handled.contains(&role.name.as_str()) || !use_role[role.name.as_str()] {
            continue;
        }
        builder.push(" with ");
        match role.kind {
            RoleKind::SpanOnly => {
                let surface = role.name.to_lowercase();
                let target = builder.entity(&role.name, &surface);
                plan.arguments.push(Argument {
                    role: role.name.clone(),
                    target,
                });
            }
            RoleKind::SpanWithValue => {
                let value = pick_value(role, rng).to_owned();
                let target = builder.entity(&role.name, &value);
                plan.arguments.push(Argument {
                    role: role.name.clone(),
                    target,
                });
                plan.attributes.insert(role.name.clone(), value);
            }
        }
    }

    builder.push(".");
    builder.event(&type_def.name, trigger, plan.arguments, plan.attributes);
}

/// Generates `n_docs` schema-conformant synthetic reports. Deterministic in
/// `(schema, n_docs, seed)`; documents are tagged `synthetic = true` with a
/// randomly assigned modality and no split.
pub fn generate_synthetic_corpus(schema: &Schema, n_docs: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n_docs);
    let width = n_docs.to_string().len().max(4);
    for i in 0..n_docs {
        let id = format!("synth-{:0width$}", i + 1, width = width);
        docs.push(generate_document(schema, &id, &mut rng));
    }
    docs
}

/// How many events of each type one report carries. Tuned to the reference
/// per-report rates (≈2.5 indications, ≈9.5 lesions, ≈10 other problems);
/// unknown event types in custom schemas get one or two events.
fn events_for_type(name: &str, rng: &mut ChaCha8Rng) -> usize {
    match name {
        "Indication" => rng.random_range(2..=3),
        "Lesion" => rng.random_range(8..=11),
        "Medical Problem" => rng.random_range(9..=11),
        _ => rng.random_range(1..=2),
    }
}

fn generate_document(schema: &Schema, id: &str, rng: &mut ChaCha8Rng) -> Document {
    let mut builder = DocBuilder::new();

    let modality = *[Modality::Ct, Modality::Mri, Modality::PetCt]
        .choose(rng)
        .unwrap();

    // Header section: Indication events if that type exists, else nothing.
    let mut finding_types: Vec<&EventTypeDef> = Vec::new();
    let mut header_types: Vec<&EventTypeDef> = Vec::new();
    for def in schema.event_types() {
        if def.name == "Indication" {
            header_types.push(def);
        } else {
            finding_types.push(def);
        }
    }

    if !header_types.is_empty() {
        builder.push("INDICATION: ");
        for (i, def) in header_types.iter().enumerate() {
            let n = events_for_type(&def.name, rng);
            for j in 0..n {
                if i + j > 0 {
                    builder.push(" ");
                }
                event_sentence(&mut builder, schema, def, rng);
            }
        }
        builder.push("\n");
    }

    builder.push("FINDINGS: ");
    // One sentence per event; interleave a few annotation-free fillers.
    let mut sentence_defs: Vec<Option<&EventTypeDef>> = Vec::new();
    for def in &finding_types {
        for _ in 0..events_for_type(&def.name, rng) {
            sentence_defs.push(Some(def));
        }
    }
    for _ in 0..rng.random_range(2..=4) {
        sentence_defs.push(None);
    }
    sentence_defs.shuffle(rng);
    for (i, def) in sentence_defs.iter().enumerate() {
        if i > 0 {
            builder.push(" ");
        }
        match def {
            Some(def) => event_sentence(&mut builder, schema, def, rng),
            None => {
                builder.push(filler_sentences().choose(rng).unwrap());
                builder.push(".");
            }
        }
    }
    builder.push("\n");

    Document {
        id: id.to_owned(),
        text: builder.text,
        entities: builder.entities,
        events: builder.events,
        metadata: Metadata {
            modality: Some(modality),
            split: None,
            synthetic: true,
        },
    }
}
