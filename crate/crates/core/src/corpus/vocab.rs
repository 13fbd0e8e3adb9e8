//! Vocabularies of words and equation units.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

use super::tokenize::RawToken;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabKind {
    Word,
    Unit,
}

impl VocabKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VocabKind::Word => "word",
            VocabKind::Unit => "unit",
        }
    }
}

/// Bidirectional map between surface forms and dense ids `0..len`, with
/// corpus frequencies. Ids are assigned by descending frequency, ties broken
/// by the surface form.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    kind: VocabKind,
    forms: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Build from (form, frequency) entries. Entries are re-sorted into the
    /// canonical id order.
    pub fn from_counts(kind: VocabKind, entries: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut entries: Vec<(String, u64)> = entries.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.dedup_by(|a, b| a.0 == b.0);
        Self::from_ordered(kind, entries)
    }

    /// Build keeping the given id order (used when reading a bundle).
    pub fn from_ordered(kind: VocabKind, entries: Vec<(String, u64)>) -> Self {
        let mut forms = Vec::with_capacity(entries.len());
        let mut freqs = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (form, freq) in entries {
            index.insert(form.clone(), forms.len() as u32);
            forms.push(form);
            freqs.push(freq);
        }
        Vocabulary {
            kind,
            forms,
            freqs,
            index,
        }
    }

    pub fn kind(&self) -> VocabKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn id(&self, form: &str) -> Option<u32> {
        self.index.get(form).copied()
    }

    pub fn form(&self, id: u32) -> Option<&str> {
        self.forms.get(id as usize).map(String::as_str)
    }

    pub fn freq(&self, id: u32) -> Option<u64> {
        self.freqs.get(id as usize).copied()
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str, u64)> + '_ {
        self.forms
            .iter()
            .zip(&self.freqs)
            .enumerate()
            .map(|(id, (form, freq))| (id as u32, form.as_str(), *freq))
    }
}

/// Stopword set. The default list ships with the crate.
#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn english() -> Self {
        Self::parse(include_str!("stopwords.txt"))
    }

    /// One word per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn extend<I: IntoIterator<Item = String>>(&mut self, words: I) {
        self.0.extend(words);
    }
}

/// Word vocabulary filter parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabParams {
    /// Minimum term frequency.
    pub min_tf: u64,
    /// Minimum character length for ordinary words.
    pub min_len: usize,
    /// Number of most frequent remaining words treated as stopwords.
    pub top_stop: usize,
    /// Number of most frequent short forms admitted as abbreviations.
    pub abbrev_top: usize,
    /// Character length of abbreviations.
    pub abbrev_len: usize,
}

impl Default for VocabParams {
    fn default() -> Self {
        VocabParams {
            min_tf: 10,
            min_len: 4,
            top_stop: 25,
            abbrev_top: 50,
            abbrev_len: 3,
        }
    }
}

/// Corpus-wide counts of word tokens.
pub fn count_words<'a, I>(token_lists: I) -> HashMap<String, u64>
where
    I: IntoIterator<Item = &'a [RawToken]>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for tokens in token_lists {
        for token in tokens {
            if let RawToken::Word(w) = token {
                *counts.entry(w.clone()).or_default() += 1;
            }
        }
    }
    counts
}

fn ranked<'a>(counts: impl Iterator<Item = (&'a String, &'a u64)>) -> Vec<(&'a String, u64)> {
    let mut ranked: Vec<(&String, u64)> = counts.map(|(w, c)| (w, *c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
}

/// The `top` most frequent non-stopword forms, removed as frequency stopwords.
pub fn frequency_stop_list(counts: &HashMap<String, u64>, stopwords: &Stopwords, top: usize) -> Vec<String> {
    ranked(counts.iter().filter(|(w, _)| !stopwords.contains(w)))
        .into_iter()
        .take(top)
        .map(|(w, _)| w.clone())
        .collect()
}

/// Builds a word vocabulary with an optional extra token filter (for
/// example a part-of-speech test supplied by the caller).
pub struct WordVocabBuilder<'a> {
    params: VocabParams,
    stopwords: &'a Stopwords,
    filter: Option<Box<dyn Fn(&str) -> bool + 'a>>,
}

impl<'a> WordVocabBuilder<'a> {
    pub fn new(params: VocabParams, stopwords: &'a Stopwords) -> Self {
        WordVocabBuilder {
            params,
            stopwords,
            filter: None,
        }
    }

    /// Keep only forms for which `filter` returns true.
    pub fn with_filter(mut self, filter: impl Fn(&str) -> bool + 'a) -> Self {
        self.filter = Some(Box::new(filter));
        self
    }

    pub fn build_from_counts(&self, counts: &HashMap<String, u64>) -> Result<Vocabulary> {
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let p = &self.params;
        let freq_stops: HashSet<String> = frequency_stop_list(counts, self.stopwords, p.top_stop)
            .into_iter()
            .collect();
        let candidates: Vec<(&String, u64)> = ranked(counts.iter().filter(|(w, _)| {
            !self.stopwords.contains(w)
                && !freq_stops.contains(*w)
                && self.filter.as_ref().is_none_or(|f| f(w))
        }));

        let mut chosen: Vec<(String, u64)> = candidates
            .iter()
            .filter(|(w, c)| *c >= p.min_tf && w.chars().count() >= p.min_len)
            .map(|(w, c)| ((*w).clone(), *c))
            .collect();
        if p.abbrev_len < p.min_len {
            chosen.extend(
                candidates
                    .iter()
                    .filter(|(w, _)| w.chars().count() == p.abbrev_len)
                    .take(p.abbrev_top)
                    .filter(|(_, c)| *c >= p.min_tf)
                    .map(|(w, c)| ((*w).clone(), *c)),
            );
        }
        Ok(Vocabulary::from_counts(VocabKind::Word, chosen))
    }

    pub fn build<'t, I>(&self, token_lists: I) -> Result<Vocabulary>
    where
        I: IntoIterator<Item = &'t [RawToken]>,
    {
        self.build_from_counts(&count_words(token_lists))
    }
}

/// Word vocabulary under the default filter rules. Errors on an empty corpus.
pub fn build_word_vocabulary<'t, I>(token_lists: I, stopwords: &Stopwords, params: &VocabParams) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'t [RawToken]>,
{
    WordVocabBuilder::new(params.clone(), stopwords).build(token_lists)
}
