//! Toolkit for granular event annotations over radiology report text.
//!
//! The crate covers the full evaluation pipeline for trigger/argument event
//! annotations stored in standoff form:
//!
//! * [`standoff`] — parse and serialize paired `.txt`/`.ann` files,
//! * [`schema`] — load the event schema and lint documents against it,
//! * [`graph`] — convert between the event view and the entity/relation view,
//! * [`equivalence`] — span and annotation equivalence under the overlap and
//!   strict criteria,
//! * [`alignment`] — deterministic one-to-one pairing of reference and
//!   predicted annotations,
//! * [`scoring`] — precision/recall/F1 per category plus span-error breakdown,
//! * [`agreement`] — pairwise inter-annotator agreement as F1,
//! * [`bootstrap`] — paired bootstrap significance test for system comparison,
//! * [`stats`] — corpus distribution reports, split manifests, and a
//!   deterministic synthetic corpus generator,
//! * [`corpus`] — directory-level corpus loading and writing.

pub mod agreement;
pub mod alignment;
pub mod bootstrap;
pub mod corpus;
pub mod equivalence;
pub mod graph;
pub mod schema;
pub mod scoring;
pub mod standoff;
pub mod stats;
mod synth;

pub use standoff::{Document, Entity, EventAnnotation, Modality, Split, TextSpan};
pub use synth::generate_synthetic_corpus;
