//! Versioned binary model file.
//!
//! Layout (little-endian): magic, format version, mode, equation-vector
//! provenance, K, word/equation/unit counts, seed, length-prefixed config
//! echo, then `f32` matrices (word rho, word alpha, equation rho, equation
//! alpha, and for the unit model unit rho, unit alpha) and a SHA-256 of
//! everything before it.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::{EmbeddingTable, EquationProvenance, Mode, Model, ModelConfig, ObjectClass};

pub const MODEL_MAGIC: &[u8; 8] = b"EQEMBMDL";
pub const MODEL_FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelHeader {
    pub version: u32,
    pub mode: Mode,
    pub provenance: EquationProvenance,
    pub dim: usize,
    pub n_words: usize,
    pub n_equations: usize,
    pub n_units: usize,
    pub seed: u64,
    /// `key=value` lines of the training configuration.
    pub config: String,
}

impl fmt::Display for ModelHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "format_version\t{}", self.version)?;
        writeln!(f, "mode\t{}", self.mode)?;
        writeln!(f, "equation_vectors\t{}", self.provenance.as_str())?;
        writeln!(f, "K\t{}", self.dim)?;
        writeln!(f, "words\t{}", self.n_words)?;
        writeln!(f, "equations\t{}", self.n_equations)?;
        writeln!(f, "units\t{}", self.n_units)?;
        writeln!(f, "seed\t{}", self.seed)?;
        for line in self.config.lines() {
            if let Some((k, v)) = line.split_once('=') {
                writeln!(f, "config.{k}\t{v}")?;
            }
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Config(format!("{v} does not fit the model file")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_matrix(out: &mut Vec<u8>, values: &[f64]) {
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// Serialize a model to bytes.
pub fn encode_model(model: &Model) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    out.push(model.mode.code());
    out.push(model.provenance.code());
    put_u32(&mut out, model.dim())?;
    put_u32(&mut out, model.words.rows())?;
    put_u32(&mut out, model.equations.rows())?;
    put_u32(&mut out, model.units.as_ref().map_or(0, EmbeddingTable::rows))?;
    out.extend_from_slice(&model.config.seed.to_le_bytes());
    let config = model.config.to_kv();
    put_u32(&mut out, config.len())?;
    out.extend_from_slice(config.as_bytes());
    for table in [Some(&model.words), Some(&model.equations), model.units.as_ref()].into_iter().flatten() {
        put_matrix(&mut out, table.rho_matrix());
        put_matrix(&mut out, table.alpha_matrix());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::corrupt(self.path, format!("truncated at byte {} (wanted {n} more)", self.at))
        })?;
        let slice = &self.bytes[self.at..end];
        self.at = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn matrix(&mut self, rows: usize, dim: usize) -> Result<Vec<f64>> {
        let n = rows
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::corrupt(self.path, "matrix size overflows"))?;
        Ok(self
            .take(n)?
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect())
    }
}

fn verify<'a>(bytes: &'a [u8], path: &Path) -> Result<&'a [u8]> {
    if bytes.len() < MODEL_MAGIC.len() || &bytes[..MODEL_MAGIC.len()] != MODEL_MAGIC {
        return Err(Error::corrupt(path, "not a model file (bad magic)"));
    }
    if bytes.len() < MODEL_MAGIC.len() + DIGEST_LEN {
        return Err(Error::corrupt(path, "truncated"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::corrupt(path, "checksum mismatch (truncated or modified file)"));
    }
    Ok(body)
}

fn read_header(r: &mut Reader<'_>) -> Result<ModelHeader> {
    r.take(MODEL_MAGIC.len())?;
    let version = r.u32()?;
    if version as u32 != MODEL_FORMAT_VERSION {
        return Err(Error::corrupt(r.path, format!("unsupported format version {version}")));
    }
    let mode = Mode::from_code(r.u8()?).ok_or_else(|| Error::corrupt(r.path, "unknown mode"))?;
    let provenance =
        EquationProvenance::from_code(r.u8()?).ok_or_else(|| Error::corrupt(r.path, "unknown provenance"))?;
    let dim = r.u32()?;
    let n_words = r.u32()?;
    let n_equations = r.u32()?;
    let n_units = r.u32()?;
    let seed = r.u64()?;
    let config_len = r.u32()?;
    let config = std::str::from_utf8(r.take(config_len)?)
        .map_err(|_| Error::corrupt(r.path, "config echo is not UTF-8"))?
        .to_string();
    Ok(ModelHeader {
        version: version as u32,
        mode,
        provenance,
        dim,
        n_words,
        n_equations,
        n_units,
        seed,
        config,
    })
}

/// Parse and verify model bytes. `path` is only used in error messages.
pub fn decode_model(bytes: &[u8], path: &Path) -> Result<Model> {
    let body = verify(bytes, path)?;
    let mut r = Reader { bytes: body, at: 0, path };
    let header = read_header(&mut r)?;
    let config = ModelConfig::from_kv(&header.config).map_err(|e| Error::corrupt(path, e.to_string()))?;
    let dim = header.dim;
    if dim == 0 {
        return Err(Error::corrupt(path, "zero dimension"));
    }
    let mut table = |class, rows| -> Result<EmbeddingTable> {
        let rho = r.matrix(rows, dim)?;
        let alpha = r.matrix(rows, dim)?;
        EmbeddingTable::from_matrices(class, dim, rho, alpha)
    };
    let words = table(ObjectClass::Word, header.n_words)?;
    let equations = table(ObjectClass::Equation, header.n_equations)?;
    let units = if header.mode == Mode::EqEmbU {
        Some(table(ObjectClass::Unit, header.n_units)?)
    } else {
        None
    };
    if r.at != body.len() {
        return Err(Error::corrupt(path, "trailing bytes after matrices"));
    }
    Ok(Model {
        mode: header.mode,
        provenance: header.provenance,
        config,
        words,
        equations,
        units,
        eq_units: Vec::new(),
    })
}

/// Write atomically: a temporary sibling file is renamed into place.
pub fn write_model(path: &Path, model: &Model) -> Result<()> {
    let bytes = encode_model(model)?;
    write_atomic(path, &bytes)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn read_model(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, path)
}

/// Header of a model file after checksum verification.
pub fn inspect_model(path: &Path) -> Result<ModelHeader> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let body = verify(&bytes, path)?;
    read_header(&mut Reader { bytes: body, at: 0, path })
}
