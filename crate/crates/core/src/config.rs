//! Run configuration: a flat `key=value` file plus overrides.
//!
//! Precedence is overrides > file > defaults. Every key of
//! [`ModelConfig`] and [`IngestParams`] is accepted, plus the paths, the
//! mode, the evaluation grid and the pseudo log-likelihood reading.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bundle::IngestParams;
use crate::error::{Error, Result};
use crate::eval::{grid_configs, GridPoint, PseudoReading};
use crate::model::{Mode, ModelConfig};

/// The (mode, K, W, E) grid searched by `eval`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub modes: Vec<Mode>,
    pub dims: Vec<usize>,
    pub word_windows: Vec<usize>,
    pub eq_windows: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            modes: Mode::ALL.to_vec(),
            dims: vec![25, 50, 75, 100],
            word_windows: vec![4, 8, 16],
            eq_windows: vec![8, 16],
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<GridPoint> {
        grid_configs(&self.modes, &self.dims, &self.word_windows, &self.eq_windows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// The only setting without a default.
    pub corpus_dir: Option<PathBuf>,
    pub bundle_dir: PathBuf,
    pub model_path: PathBuf,
    pub report_path: PathBuf,
    pub mode: Mode,
    pub model: ModelConfig,
    pub ingest: IngestParams,
    pub grid: GridSpec,
    pub pseudo_ll: PseudoReading,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_dir: None,
            bundle_dir: PathBuf::from("bundle"),
            model_path: PathBuf::from("model.eqemb"),
            report_path: PathBuf::from("grid.tsv"),
            mode: Mode::EqEmb,
            model: ModelConfig::default(),
            ingest: IngestParams::default(),
            grid: GridSpec::default(),
            pseudo_ll: PseudoReading::default(),
        }
    }
}

fn list<T>(key: &str, value: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let items: Option<Vec<T>> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse).collect();
    match items {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::Config(format!("invalid list for {key}: {value:?}"))),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Apply one setting. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus_dir" => self.corpus_dir = Some(PathBuf::from(value)),
            "bundle_dir" => self.bundle_dir = PathBuf::from(value),
            "model_path" => self.model_path = PathBuf::from(value),
            "report_path" => self.report_path = PathBuf::from(value),
            "mode" => self.mode = Mode::parse(value).ok_or_else(|| Error::Config(format!("invalid mode {value:?}")))?,
            "pseudo_ll" => {
                self.pseudo_ll =
                    PseudoReading::parse(value).ok_or_else(|| Error::Config(format!("invalid pseudo_ll {value:?}")))?
            }
            "grid_modes" => self.grid.modes = list(key, value, Mode::parse)?,
            "grid_k" => self.grid.dims = list(key, value, |s| s.parse().ok())?,
            "grid_w" => self.grid.word_windows = list(key, value, |s| s.parse().ok())?,
            "grid_e" => self.grid.eq_windows = list(key, value, |s| s.parse().ok())?,
            _ => {
                if !self.model.set(key, value)? && !self.ingest.set(key, value)? {
                    return Err(Error::Config(format!("unknown key {key:?}")));
                }
            }
        }
        Ok(())
    }

    /// Apply every `key=value` line of `text`. Blank lines and lines starting
    /// with `#` are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Defaults, then the optional file, then the overrides in order.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut config = RunConfig::default();
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            config.apply_text(&text)?;
        }
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("override must be key=value, got {o:?}")))?;
            config.set(key.trim(), value.trim())?;
        }
        config.model.validate()?;
        Ok(config)
    }

    pub fn corpus_dir(&self) -> Result<&Path> {
        self.corpus_dir
            .as_deref()
            .ok_or_else(|| Error::Usage("corpus_dir is required".into()))
    }

    /// The effective configuration, one `key=value` per line in a fixed
    /// order. Applying it to the defaults reproduces `self`.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        if let Some(dir) = &self.corpus_dir {
            out.push_str(&format!("corpus_dir={}\n", dir.display()));
        }
        out.push_str(&format!(
            "bundle_dir={}\nmodel_path={}\nreport_path={}\nmode={}\npseudo_ll={}\n",
            self.bundle_dir.display(),
            self.model_path.display(),
            self.report_path.display(),
            self.mode,
            self.pseudo_ll.as_str()
        ));
        out.push_str(&self.model.to_kv());
        out.push_str(&self.ingest.to_kv());
        out.push_str(&format!("parallel={}\n", self.ingest.parallel));
        let modes: Vec<&str> = self.grid.modes.iter().map(|m| m.as_str()).collect();
        out.push_str(&format!(
            "grid_modes={}\ngrid_k={}\ngrid_w={}\ngrid_e={}\n",
            modes.join(","),
            join(&self.grid.dims),
            join(&self.grid.word_windows),
            join(&self.grid.eq_windows)
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_override_then_file_then_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "# comment\nk=30\nmode=eqemb_u\nlearning_rate=0.05\n").unwrap();
        let c = RunConfig::load(Some(&path), &["k=40".into()]).unwrap();
        assert_eq!(c.model.dim, 40);
        assert_eq!(c.mode, Mode::EqEmbU);
        assert_eq!(c.model.learning_rate, 0.05);
        assert_eq!(c.model.max_epochs, 20);
    }

    #[test]
    fn effective_config_round_trips() {
        let mut c = RunConfig::default();
        c.set("corpus_dir", "papers").unwrap();
        c.set("grid_k", "25,50").unwrap();
        c.set("singleton_sample", "100").unwrap();
        c.set("init_scale", "0.01").unwrap();
        c.set("parallel", "true").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&c.to_kv()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_kv(), c.to_kv());
    }

    #[test]
    fn bad_settings_are_rejected() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("nonsense", "1"), Err(Error::Config(_))));
        assert!(matches!(c.set("k", "ten"), Err(Error::Config(_))));
        assert!(matches!(c.set("grid_modes", "eqemb,bogus"), Err(Error::Config(_))));
        assert!(matches!(c.apply_text("no equals sign"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::load(None, &["k".into()]), Err(Error::Usage(_))));
        assert!(matches!(RunConfig::default().corpus_dir(), Err(Error::Usage(_))));
    }
}
