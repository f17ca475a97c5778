//! Corpus directory I/O.
//!
//! A corpus directory holds one `<id>.txt` / `<id>.ann` pair per document
//! plus an optional `manifest.json` carrying per-document metadata:
//!
//! ```json
//! { "documents": { "doc-01": { "modality": "CT", "split": "train" } } }
//! ```
//!
//! Every `.txt` must have its `.ann` and vice versa; manifest entries must
//! refer to documents that exist. Other files are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::standoff::{
    parse_document, serialize_document, Document, Metadata, ParseError, SerializeError,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("document '{doc}': {source}")]
    Parse {
        doc: String,
        #[source]
        source: ParseError,
    },
    #[error("{0}")]
    Serialize(#[from] SerializeError),
    #[error("annotation file without text file: {0}")]
    StrayAnnotation(PathBuf),
    #[error("text file without annotation file: {0}")]
    MissingAnnotation(PathBuf),
    #[error("manifest.json: {0}")]
    Manifest(serde_json::Error),
    #[error("manifest.json refers to unknown document '{0}'")]
    UnknownManifestEntry(String),
    #[error("duplicate document id '{0}'")]
    DuplicateDocId(String),
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    documents: BTreeMap<String, Metadata>,
}

fn read_file(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CorpusError> {
    fs::write(path, contents).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Loads every document in the directory, sorted by id.
pub fn load_corpus(dir: &Path) -> Result<Vec<Document>, CorpusError> {
    let entries = fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut text_stems = BTreeSet::new();
    let mut ann_stems = BTreeSet::new();
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Io {
            path: dir.to_owned(),
            source,
        })?;
        let path = entry.path();
        let (Some(stem), Some(ext)) = (
            path.file_stem().and_then(|s| s.to_str()),
            path.extension().and_then(|s| s.to_str()),
        ) else {
            continue;
        };
        match ext {
            "txt" => {
                text_stems.insert(stem.to_owned());
            }
            "ann" => {
                ann_stems.insert(stem.to_owned());
            }
            _ => {}
        }
    }
    if let Some(stray) = ann_stems.difference(&text_stems).next() {
        return Err(CorpusError::StrayAnnotation(
            dir.join(format!("{stray}.ann")),
        ));
    }
    if let Some(missing) = text_stems.difference(&ann_stems).next() {
        return Err(CorpusError::MissingAnnotation(
            dir.join(format!("{missing}.txt")),
        ));
    }

    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = if manifest_path.is_file() {
        serde_json::from_str(&read_file(&manifest_path)?).map_err(CorpusError::Manifest)?
    } else {
        Manifest::default()
    };
    if let Some(unknown) = manifest
        .documents
        .keys()
        .find(|id| !text_stems.contains(*id))
    {
        return Err(CorpusError::UnknownManifestEntry(unknown.clone()));
    }

    let mut docs = Vec::with_capacity(text_stems.len());
    for id in &text_stems {
        let text = read_file(&dir.join(format!("{id}.txt")))?;
        let ann = read_file(&dir.join(format!("{id}.ann")))?;
        let mut doc = parse_document(&text, &ann, id).map_err(|source| CorpusError::Parse {
            doc: id.clone(),
            source,
        })?;
        if let Some(metadata) = manifest.documents.get(id) {
            doc.metadata = metadata.clone();
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Writes `<id>.txt`, `<id>.ann`, and `manifest.json` for every document.
/// Creates the directory if needed; existing files for the same ids are
/// overwritten.
pub fn write_corpus(dir: &Path, docs: &[Document]) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut manifest = Manifest::default();
    for doc in docs {
        if manifest.documents.contains_key(&doc.id) {
            return Err(CorpusError::DuplicateDocId(doc.id.clone()));
        }
        manifest
            .documents
            .insert(doc.id.clone(), doc.metadata.clone());
    }
    for doc in docs {
        let (text, ann) = serialize_document(doc)?;
        write_file(&dir.join(format!("{}.txt", doc.id)), &text)?;
        write_file(&dir.join(format!("{}.ann", doc.id)), &ann)?;
    }
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    write_file(&dir.join("manifest.json"), &manifest_json)?;
    Ok(())
}
