//! The corpus bundle: everything ingestion produces, on disk and in memory.
//!
//! Directory layout:
//!
//! | file | content |
//! |---|---|
//! | `manifest.txt` | effective ingestion config and counts |
//! | `vocab.tsv` | form, id, freq |
//! | `equations.tsv` | eq_id, occurrence_count, latex, first doc_id |
//! | `units.tsv` | unit, id, freq |
//! | `streams.bin` | per-document item ids |
//! | `eq_units.bin` | per-equation unit ids |
//! | `heldout.valid.tsv`, `heldout.test.tsv` | held-out items |
//!
//! Every file starts with a one-line header carrying the format version.
//! Binary files use little-endian `u32`s; stream items tag equation ids
//! with the high bit and use `u32::MAX` for gaps.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;

use crate::corpus::{
    build_heldout, build_token_streams, extract_display_equations, tokenize_words, EquationRecord,
    EquationRegistry, HeldOut, HeldOutItem, HeldoutParams, Item, NegativeDistribution, RawDocument, RawToken, Split, Stopwords,
    TokenStream, TokenizedDocument, VocabKind, VocabParams, Vocabulary, WordVocabBuilder,
};
use crate::error::{Error, Result};
use crate::model::TrainingData;
use crate::slt::{build_unit_vocabulary, tokenize_equation, EquationUnits, ParseOptions, SltTupleSequence, UNIT_GAP};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
const STREAMS_MAGIC: &str = "EQEMB-STREAMS";
const EQ_UNITS_MAGIC: &str = "EQEMB-EQUNITS";

/// Settings of the ingestion pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestParams {
    pub vocab: VocabParams,
    pub heldout: HeldoutParams,
    pub symbol_window: usize,
    pub unit_min_count: u64,
    pub lenient_math: bool,
    /// Extract and tokenize documents on the rayon pool. The merged result
    /// is identical to the sequential one.
    pub parallel: bool,
}

impl Default for IngestParams {
    fn default() -> Self {
        IngestParams {
            vocab: VocabParams::default(),
            heldout: HeldoutParams::default(),
            symbol_window: 1,
            unit_min_count: 1,
            lenient_math: true,
            parallel: false,
        }
    }
}

impl IngestParams {
    /// Apply one `key=value` setting using the keys of [`IngestParams::to_kv`]
    /// (plus `parallel`). Unknown keys are reported as `Ok(false)`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value for {key}: {value:?}")))
        }
        let v = &mut self.vocab;
        let h = &mut self.heldout;
        match key {
            "vocab_min_tf" => v.min_tf = num(key, value)?,
            "vocab_min_len" => v.min_len = num(key, value)?,
            "vocab_top_stop" => v.top_stop = num(key, value)?,
            "vocab_abbrev_top" => v.abbrev_top = num(key, value)?,
            "vocab_abbrev_len" => v.abbrev_len = num(key, value)?,
            "heldout_per_equation" => h.per_equation = num(key, value)?,
            "heldout_context_window" => h.context_window = num(key, value)?,
            "heldout_candidate_window" => h.candidate_window = num(key, value)?,
            "heldout_negatives" => h.n_negatives = num(key, value)?,
            "heldout_negative_distribution" => {
                h.negatives = NegativeDistribution::parse(value)
                    .ok_or_else(|| Error::Config(format!("invalid heldout_negative_distribution {value:?}")))?
            }
            "singleton_sample" => {
                h.singleton_sample = if value == "all" { None } else { Some(num(key, value)?) }
            }
            "heldout_seed" => h.seed = num(key, value)?,
            "symbol_window" => self.symbol_window = num(key, value)?,
            "unit_min_count" => self.unit_min_count = num(key, value)?,
            "lenient_math" => self.lenient_math = num(key, value)?,
            "parallel" => self.parallel = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn to_kv(&self) -> String {
        let v = &self.vocab;
        let h = &self.heldout;
        let singleton = h.singleton_sample.map_or_else(|| "all".to_string(), |n| n.to_string());
        format!(
            "vocab_min_tf={}\nvocab_min_len={}\nvocab_top_stop={}\nvocab_abbrev_top={}\nvocab_abbrev_len={}\n\
             heldout_per_equation={}\nheldout_context_window={}\nheldout_candidate_window={}\n\
             heldout_negatives={}\nheldout_negative_distribution={}\nsingleton_sample={}\nheldout_seed={}\n\
             symbol_window={}\nunit_min_count={}\nlenient_math={}\n",
            v.min_tf,
            v.min_len,
            v.top_stop,
            v.abbrev_top,
            v.abbrev_len,
            h.per_equation,
            h.context_window,
            h.candidate_window,
            h.n_negatives,
            h.negatives.as_str(),
            singleton,
            h.seed,
            self.symbol_window,
            self.unit_min_count,
            self.lenient_math,
        )
    }
}

/// Counts reported after ingestion, in the order documents, words,
/// equations, units.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub documents: usize,
    pub words: usize,
    pub equations: usize,
    pub units: usize,
    pub region_errors: usize,
    pub untokenizable: usize,
    pub heldout_skipped: usize,
}

impl IngestStats {
    pub const HEADER: &'static str = "documents\twords\tequations\tunits";

    pub fn summary_row(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.documents, self.words, self.equations, self.units)
    }
}

impl fmt::Display for IngestStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", Self::HEADER)?;
        write!(f, "{}", self.summary_row())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub vocabulary: Vocabulary,
    pub registry: EquationRegistry,
    pub streams: Vec<TokenStream>,
    pub units: EquationUnits,
    pub heldout: HeldOut,
    pub stats: IngestStats,
    /// Effective ingestion config as `key=value` lines.
    pub config: String,
}

impl Bundle {
    /// Training inputs: streams, sampling frequencies, units and the
    /// validation split.
    pub fn training_data(&self) -> TrainingData {
        TrainingData::new(self.streams.clone(), self.vocabulary.freqs().to_vec(), self.registry.len())
            .with_units(&self.units)
            .with_heldout(&self.heldout)
    }

    pub fn split(&self, split: Split) -> &[HeldOutItem] {
        match split {
            Split::Validation => &self.heldout.validation,
            Split::Test => &self.heldout.test,
        }
    }
}

/// Read every `.tex` file of `dir`, sorted by file name. The document id is
/// the file stem. Unreadable files are skipped with a warning.
pub fn read_corpus_dir(dir: &Path) -> Result<Vec<RawDocument>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "tex"))
        .collect();
    paths.sort();
    let mut docs = Vec::new();
    for path in paths {
        let doc_id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let text = match fs::read(&path) {
            Ok(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                continue;
            }
        };
        match RawDocument::new(doc_id, text) {
            Ok(doc) => docs.push(doc),
            Err(e) => warn!("skipping {}: {e}", path.display()),
        }
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(docs)
}

struct Prepared {
    doc_id: String,
    tokens: Vec<RawToken>,
    equations: Vec<String>,
    errors: usize,
}

fn prepare(doc: &RawDocument) -> Prepared {
    let extracted = extract_display_equations(doc);
    for err in &extracted.errors {
        warn!("{}: skipped math region at byte {}: {}", doc.doc_id, err.offset, err.message);
    }
    Prepared {
        doc_id: doc.doc_id.clone(),
        tokens: tokenize_words(&extracted.prose),
        equations: extracted.equations.into_iter().map(|e| e.latex).collect(),
        errors: extracted.errors.len(),
    }
}

/// Run the whole ingestion pipeline on in-memory documents. Documents are
/// processed in `doc_id` order.
pub fn ingest_documents(mut docs: Vec<RawDocument>, params: &IngestParams) -> Result<Bundle> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    if let Some(pair) = docs.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
        return Err(Error::Usage(format!("duplicate document id {:?}", pair[0].doc_id)));
    }
    let prepared: Vec<Prepared> = if params.parallel {
        docs.par_iter().map(prepare).collect()
    } else {
        docs.iter().map(prepare).collect()
    };

    let mut registry = EquationRegistry::new();
    let mut region_errors = 0;
    let tokenized: Vec<TokenizedDocument> = prepared
        .into_iter()
        .map(|p| {
            region_errors += p.errors;
            let eq_ids = p.equations.iter().map(|latex| registry.register(&p.doc_id, latex)).collect();
            TokenizedDocument {
                doc_id: p.doc_id,
                tokens: p.tokens,
                eq_ids,
            }
        })
        .collect();

    let stopwords = Stopwords::english();
    let vocabulary =
        WordVocabBuilder::new(params.vocab.clone(), &stopwords).build(tokenized.iter().map(|d| d.tokens.as_slice()))?;
    let streams = build_token_streams(&tokenized, &vocabulary)?;

    let options = ParseOptions {
        lenient: params.lenient_math,
    };
    let tokenize = |r: &EquationRecord| match tokenize_equation(r.eq_id, &r.latex, params.symbol_window, options) {
        Ok(seq) => seq,
        Err(e) => {
            warn!("equation {} is untokenizable: {e}", r.eq_id);
            SltTupleSequence {
                eq_id: r.eq_id,
                tuples: Vec::new(),
            }
        }
    };
    let sequences: Vec<SltTupleSequence> = if params.parallel {
        registry.records().par_iter().map(tokenize).collect()
    } else {
        registry.records().iter().map(tokenize).collect()
    };
    let units = if sequences.is_empty() {
        EquationUnits {
            vocabulary: Vocabulary::from_counts(VocabKind::Unit, []),
            sequences: Vec::new(),
        }
    } else {
        build_unit_vocabulary(&sequences, registry.len(), params.unit_min_count)?
    };
    let untokenizable = units.sequences.iter().filter(|s| s.iter().all(|&u| u == UNIT_GAP)).count();

    let heldout = build_heldout(&streams, &registry, &vocabulary, &params.heldout);
    let stats = IngestStats {
        documents: streams.len(),
        words: vocabulary.len(),
        equations: registry.len(),
        units: units.vocabulary.len(),
        region_errors,
        untokenizable,
        heldout_skipped: heldout.skipped,
    };
    Ok(Bundle {
        vocabulary,
        registry,
        streams,
        units,
        heldout,
        stats,
        config: params.to_kv(),
    })
}

/// Read a corpus directory and ingest it.
pub fn ingest_dir(dir: &Path, params: &IngestParams) -> Result<Bundle> {
    ingest_documents(read_corpus_dir(dir)?, params)
}

fn header(columns: &[&str]) -> String {
    format!("#format={BUNDLE_FORMAT_VERSION}\t{}\n", columns.join("\t"))
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn encode_streams(streams: &[TokenStream]) -> Vec<u8> {
    let mut out = format!("{STREAMS_MAGIC} format={BUNDLE_FORMAT_VERSION}\n").into_bytes();
    put_u32(&mut out, streams.len() as u32);
    for s in streams {
        put_u32(&mut out, s.doc_id.len() as u32);
        out.extend_from_slice(s.doc_id.as_bytes());
        put_u32(&mut out, s.items.len() as u32);
        for item in &s.items {
            put_u32(&mut out, item.encode());
        }
    }
    out
}

fn encode_eq_units(sequences: &[Vec<u32>]) -> Vec<u8> {
    let mut out = format!("{EQ_UNITS_MAGIC} format={BUNDLE_FORMAT_VERSION}\n").into_bytes();
    put_u32(&mut out, sequences.len() as u32);
    for seq in sequences {
        put_u32(&mut out, seq.len() as u32);
        for &u in seq {
            put_u32(&mut out, u);
        }
    }
    out
}

fn vocab_tsv(vocab: &Vocabulary, first: &str) -> String {
    let mut out = header(&[first, "id", "freq"]);
    for (id, form, freq) in vocab.iter() {
        out.push_str(&format!("{form}\t{id}\t{freq}\n"));
    }
    out
}

fn equations_tsv(registry: &EquationRegistry) -> String {
    let mut out = header(&["eq_id", "occurrence_count", "latex", "doc_id"]);
    for r in registry.records() {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", r.eq_id, r.occurrence_count, r.latex, r.doc_id));
    }
    out
}

fn encode_context(context: &[Item]) -> String {
    context
        .iter()
        .filter_map(|i| match i {
            Item::Word(w) => Some(format!("w{w}")),
            Item::Equation(e) => Some(format!("e{e}")),
            Item::Gap => None,
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn heldout_tsv(items: &[HeldOutItem]) -> String {
    let mut out = header(&["eq_id", "doc", "position", "target", "context", "negatives"]);
    for i in items {
        let negatives: Vec<String> = i.negatives.iter().map(u32::to_string).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            i.eq_id,
            i.doc,
            i.position,
            i.target,
            encode_context(&i.context),
            negatives.join(",")
        ));
    }
    out
}

fn manifest(bundle: &Bundle) -> String {
    let s = &bundle.stats;
    format!(
        "#format={BUNDLE_FORMAT_VERSION}\n{}documents={}\nwords={}\nequations={}\nunits={}\nregion_errors={}\n\
         untokenizable={}\nheldout_valid={}\nheldout_test={}\nheldout_skipped={}\n",
        bundle.config,
        s.documents,
        s.words,
        s.equations,
        s.units,
        s.region_errors,
        s.untokenizable,
        bundle.heldout.validation.len(),
        bundle.heldout.test.len(),
        s.heldout_skipped
    )
}

/// Write a bundle into `dir` atomically: files go to a temporary sibling
/// directory that then replaces `dir`.
pub fn write_bundle(dir: &Path, bundle: &Bundle) -> Result<()> {
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "bundle".into());
    let tmp = parent.join(format!(".{name}.tmp{}", std::process::id()));
    let files: [(&str, Vec<u8>); 8] = [
        ("manifest.txt", manifest(bundle).into_bytes()),
        ("vocab.tsv", vocab_tsv(&bundle.vocabulary, "form").into_bytes()),
        ("equations.tsv", equations_tsv(&bundle.registry).into_bytes()),
        ("units.tsv", vocab_tsv(&bundle.units.vocabulary, "unit").into_bytes()),
        ("streams.bin", encode_streams(&bundle.streams)),
        ("eq_units.bin", encode_eq_units(&bundle.units.sequences)),
        ("heldout.valid.tsv", heldout_tsv(&bundle.heldout.validation).into_bytes()),
        ("heldout.test.tsv", heldout_tsv(&bundle.heldout.test).into_bytes()),
    ];
    let result = (|| -> std::io::Result<()> {
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp)?;
        for (file, bytes) in &files {
            fs::write(tmp.join(file), bytes)?;
        }
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        fs::rename(&tmp, dir)
    })();
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&tmp);
        return Err(Error::io(dir, e));
    }
    Ok(())
}

struct TsvFile {
    path: PathBuf,
    text: String,
}

impl TsvFile {
    fn open(dir: &Path, name: &str) -> Result<Self> {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let first = text.lines().next().unwrap_or_default();
        let expected = format!("#format={BUNDLE_FORMAT_VERSION}");
        if first.split('\t').next() != Some(expected.as_str()) {
            return Err(Error::corrupt(&path, format!("expected header {expected:?}")));
        }
        Ok(TsvFile { path, text })
    }

    fn rows(&self) -> impl Iterator<Item = (usize, Vec<&str>)> {
        self.text
            .lines()
            .enumerate()
            .skip(1)
            .filter(|(_, l)| !l.is_empty())
            .map(|(n, l)| (n + 1, l.split('\t').collect()))
    }

    fn bad(&self, line: usize, what: &str) -> Error {
        Error::corrupt(&self.path, format!("line {line}: {what}"))
    }

    fn field<T: std::str::FromStr>(&self, line: usize, fields: &[&str], i: usize) -> Result<T> {
        fields
            .get(i)
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| self.bad(line, &format!("bad field {i}")))
    }
}

fn read_vocab(dir: &Path, name: &str, kind: VocabKind) -> Result<Vocabulary> {
    let file = TsvFile::open(dir, name)?;
    let mut entries = Vec::new();
    for (line, fields) in file.rows() {
        let id: usize = file.field(line, &fields, 1)?;
        if id != entries.len() {
            return Err(file.bad(line, "ids must be dense and ordered"));
        }
        entries.push((fields[0].to_string(), file.field(line, &fields, 2)?));
    }
    Ok(Vocabulary::from_ordered(kind, entries))
}

fn read_equations(dir: &Path) -> Result<EquationRegistry> {
    let file = TsvFile::open(dir, "equations.tsv")?;
    let mut records = Vec::new();
    for (line, fields) in file.rows() {
        let eq_id: u32 = file.field(line, &fields, 0)?;
        if eq_id as usize != records.len() || fields.len() != 4 {
            return Err(file.bad(line, "malformed equation row"));
        }
        records.push(EquationRecord {
            eq_id,
            occurrence_count: file.field(line, &fields, 1)?,
            latex: fields[2].to_string(),
            doc_id: fields[3].to_string(),
        });
    }
    Ok(EquationRegistry::from_records(records))
}

fn parse_context(s: &str) -> Option<Vec<Item>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let (tag, id) = t.split_at(1);
            let id: u32 = id.parse().ok()?;
            match tag {
                "w" => Some(Item::Word(id)),
                "e" => Some(Item::Equation(id)),
                _ => None,
            }
        })
        .collect()
}

fn read_heldout(dir: &Path, name: &str, split: Split) -> Result<Vec<HeldOutItem>> {
    let file = TsvFile::open(dir, name)?;
    let mut items = Vec::new();
    for (line, fields) in file.rows() {
        if fields.len() != 6 {
            return Err(file.bad(line, "expected 6 fields"));
        }
        let context = parse_context(fields[4]).ok_or_else(|| file.bad(line, "bad context"))?;
        let negatives = if fields[5].is_empty() {
            Vec::new()
        } else {
            fields[5]
                .split(',')
                .map(str::parse)
                .collect::<std::result::Result<Vec<u32>, _>>()
                .map_err(|_| file.bad(line, "bad negatives"))?
        };
        items.push(HeldOutItem {
            eq_id: file.field(line, &fields, 0)?,
            doc: file.field(line, &fields, 1)?,
            position: file.field(line, &fields, 2)?,
            target: file.field(line, &fields, 3)?,
            context,
            negatives,
            split,
        });
    }
    Ok(items)
}

struct BinReader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> BinReader<'a> {
    fn open(bytes: &'a [u8], path: &'a Path, magic: &str) -> Result<Self> {
        let expected = format!("{magic} format={BUNDLE_FORMAT_VERSION}\n");
        if !bytes.starts_with(expected.as_bytes()) {
            return Err(Error::corrupt(path, format!("expected header {:?}", expected.trim_end())));
        }
        Ok(BinReader {
            bytes,
            at: expected.len(),
            path,
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::corrupt(self.path, format!("truncated at byte {}", self.at)))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::corrupt(self.path, "length overflow"))?)?;
        Ok(bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn finish(&self) -> Result<()> {
        if self.at != self.bytes.len() {
            return Err(Error::corrupt(self.path, "trailing bytes"));
        }
        Ok(())
    }
}

fn read_streams(dir: &Path) -> Result<Vec<TokenStream>> {
    let path = dir.join("streams.bin");
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let mut r = BinReader::open(&bytes, &path, STREAMS_MAGIC)?;
    let n = r.u32()?;
    let mut streams = Vec::new();
    for _ in 0..n {
        let len = r.u32()? as usize;
        let doc_id = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::corrupt(&path, "document id is not UTF-8"))?
            .to_string();
        let count = r.u32()? as usize;
        let items = r.u32s(count)?.into_iter().map(Item::decode).collect();
        streams.push(TokenStream { doc_id, items });
    }
    r.finish()?;
    Ok(streams)
}

fn read_eq_units(dir: &Path) -> Result<Vec<Vec<u32>>> {
    let path = dir.join("eq_units.bin");
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let mut r = BinReader::open(&bytes, &path, EQ_UNITS_MAGIC)?;
    let n = r.u32()?;
    let mut out = Vec::new();
    for _ in 0..n {
        let len = r.u32()? as usize;
        out.push(r.u32s(len)?);
    }
    r.finish()?;
    Ok(out)
}

fn read_manifest(dir: &Path) -> Result<(String, IngestStats)> {
    let path = dir.join("manifest.txt");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(format!("#format={BUNDLE_FORMAT_VERSION}").as_str()) {
        return Err(Error::corrupt(&path, "bad manifest header"));
    }
    let mut config = String::new();
    let mut stats = IngestStats::default();
    for line in lines {
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::corrupt(&path, format!("bad manifest line {line:?}")));
        };
        let num = || v.parse::<usize>().map_err(|_| Error::corrupt(&path, format!("bad count {line:?}")));
        match k {
            "documents" => stats.documents = num()?,
            "words" => stats.words = num()?,
            "equations" => stats.equations = num()?,
            "units" => stats.units = num()?,
            "region_errors" => stats.region_errors = num()?,
            "untokenizable" => stats.untokenizable = num()?,
            "heldout_skipped" => stats.heldout_skipped = num()?,
            "heldout_valid" | "heldout_test" => {}
            _ => {
                config.push_str(line);
                config.push('\n');
            }
        }
    }
    Ok((config, stats))
}

/// Load a bundle written by [`write_bundle`].
pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "bundle directory not found"),
        ));
    }
    let (config, stats) = read_manifest(dir)?;
    let vocabulary = read_vocab(dir, "vocab.tsv", VocabKind::Word)?;
    let registry = read_equations(dir)?;
    let unit_vocabulary = read_vocab(dir, "units.tsv", VocabKind::Unit)?;
    let streams = read_streams(dir)?;
    let sequences = read_eq_units(dir)?;
    let validation = read_heldout(dir, "heldout.valid.tsv", Split::Validation)?;
    let test = read_heldout(dir, "heldout.test.tsv", Split::Test)?;

    let corrupt = |file: &str, what: String| Error::corrupt(dir.join(file), what);
    for s in &streams {
        for item in &s.items {
            match *item {
                Item::Word(w) if w as usize >= vocabulary.len() => {
                    return Err(corrupt("streams.bin", format!("word id {w} out of range")))
                }
                Item::Equation(e) if e as usize >= registry.len() => {
                    return Err(corrupt("streams.bin", format!("equation id {e} out of range")))
                }
                _ => {}
            }
        }
    }
    if sequences.len() != registry.len() && !(sequences.is_empty() && registry.is_empty()) {
        return Err(corrupt("eq_units.bin", "one unit list per equation expected".into()));
    }
    if sequences
        .iter()
        .flatten()
        .any(|&u| u != UNIT_GAP && u as usize >= unit_vocabulary.len())
    {
        return Err(corrupt("eq_units.bin", "unit id out of range".into()));
    }
    Ok(Bundle {
        vocabulary,
        registry,
        streams,
        units: EquationUnits {
            vocabulary: unit_vocabulary,
            sequences,
        },
        heldout: HeldOut {
            validation,
            test,
            skipped: stats.heldout_skipped,
        },
        stats,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs() -> Vec<RawDocument> {
        let para = "neural network model training data network model neural training data ";
        (0..3)
            .map(|i| {
                let body = format!(
                    "{}\\begin{{equation}}x^{i}+y\\end{{equation}} {} $$\\frac{{a}}{{b}}$$ {}",
                    para.repeat(4),
                    para.repeat(3),
                    para
                );
                RawDocument::new(format!("doc{i}"), body).unwrap()
            })
            .collect()
    }

    fn params() -> IngestParams {
        IngestParams {
            vocab: VocabParams {
                top_stop: 0,
                min_tf: 2,
                ..VocabParams::default()
            },
            ..IngestParams::default()
        }
    }

    #[test]
    fn ingest_counts() {
        let bundle = ingest_documents(docs(), &params()).unwrap();
        assert_eq!(bundle.stats.documents, 3);
        assert_eq!(bundle.stats.equations, 4);
        assert_eq!(bundle.registry.total_occurrences(), 6);
        assert_eq!(bundle.stats.words, 5);
        assert!(bundle.stats.units > 0);
        assert_eq!(bundle.stats.summary_row().split('\t').count(), 4);
    }

    #[test]
    fn parallel_matches_sequential() {
        let a = ingest_documents(docs(), &params()).unwrap();
        let b = ingest_documents(
            docs(),
            &IngestParams {
                parallel: true,
                ..params()
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bundle_round_trip() {
        let bundle = ingest_documents(docs(), &params()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bundle");
        write_bundle(&path, &bundle).unwrap();
        let back = read_bundle(&path).unwrap();
        assert_eq!(back, bundle);
        // rewriting gives identical bytes
        let again = dir.path().join("again");
        write_bundle(&again, &back).unwrap();
        for f in ["streams.bin", "vocab.tsv", "heldout.valid.tsv", "manifest.txt", "eq_units.bin"] {
            assert_eq!(fs::read(path.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn corrupt_bundle_detected() {
        let bundle = ingest_documents(docs(), &params()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(dir.path().join("b").as_path(), &bundle).unwrap();
        let streams = dir.path().join("b/streams.bin");
        let bytes = fs::read(&streams).unwrap();
        fs::write(&streams, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_bundle(&dir.path().join("b")), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn empty_and_missing_corpus() {
        assert!(matches!(ingest_documents(Vec::new(), &params()), Err(Error::EmptyCorpus)));
        let err = read_corpus_dir(Path::new("/nonexistent/corpus")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
