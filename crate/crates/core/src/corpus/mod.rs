//! Corpus ingestion: display-equation extraction, word tokenization,
//! vocabulary construction, token streams and held-out sets.

mod extract;
mod heldout;
mod stream;
mod tokenize;
mod vocab;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use extract::{
    extract_display_equations, normalize_latex, placeholder, strip_comments, ExtractedDocument,
    ExtractedEquation, RegionError, DISPLAY_ENVIRONMENTS, PLACEHOLDER_CLOSE, PLACEHOLDER_OPEN,
};
pub use heldout::{build_heldout, HeldOut, HeldOutItem, HeldoutParams, NegativeDistribution, NegativeSampler, Split};
pub use stream::{build_token_streams, Item, TokenStream};
pub use tokenize::{strip_markup, tokenize_words, RawToken};
pub use vocab::{
    build_word_vocabulary, count_words, frequency_stop_list, Stopwords, VocabKind, VocabParams, Vocabulary,
    WordVocabBuilder,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RawDocument {
    pub doc_id: String,
    pub source_text: String,
}

impl RawDocument {
    pub fn new(doc_id: impl Into<String>, source_text: impl Into<String>) -> Result<Self> {
        let doc = RawDocument {
            doc_id: doc_id.into(),
            source_text: source_text.into(),
        };
        if doc.source_text.is_empty() {
            return Err(Error::Usage(format!("document {} is empty", doc.doc_id)));
        }
        Ok(doc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationRecord {
    pub eq_id: u32,
    /// Document of the first occurrence.
    pub doc_id: String,
    pub latex: String,
    pub occurrence_count: u32,
}

impl EquationRecord {
    pub fn is_singleton(&self) -> bool {
        self.occurrence_count == 1
    }
}

/// Corpus-wide equation table. Identical normalized LaTeX maps to one id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EquationRegistry {
    records: Vec<EquationRecord>,
    by_latex: HashMap<String, u32>,
}

impl EquationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<EquationRecord>) -> Self {
        let by_latex = records.iter().map(|r| (r.latex.clone(), r.eq_id)).collect();
        EquationRegistry { records, by_latex }
    }

    /// Register one occurrence and return its id.
    pub fn register(&mut self, doc_id: &str, latex: &str) -> u32 {
        if let Some(&id) = self.by_latex.get(latex) {
            self.records[id as usize].occurrence_count += 1;
            return id;
        }
        let id = self.records.len() as u32;
        self.records.push(EquationRecord {
            eq_id: id,
            doc_id: doc_id.to_string(),
            latex: latex.to_string(),
            occurrence_count: 1,
        });
        self.by_latex.insert(latex.to_string(), id);
        id
    }

    /// Register every equation of an extracted document; returns the ids in
    /// document-local order.
    pub fn register_document(&mut self, doc: &ExtractedDocument) -> Vec<u32> {
        doc.equations.iter().map(|eq| self.register(&doc.doc_id, &eq.latex)).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&EquationRecord> {
        self.records.get(id as usize)
    }

    pub fn id_of(&self, latex: &str) -> Option<u32> {
        self.by_latex.get(latex).copied()
    }

    pub fn records(&self) -> &[EquationRecord] {
        &self.records
    }

    pub fn total_occurrences(&self) -> u64 {
        self.records.iter().map(|r| r.occurrence_count as u64).sum()
    }
}

/// A document after extraction and tokenization, with its equations mapped
/// to registry ids.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedDocument {
    pub doc_id: String,
    pub tokens: Vec<RawToken>,
    /// Registry id of each document-local equation index.
    pub eq_ids: Vec<u32>,
}
