//! Bernoulli embeddings for words, equations and equation units.
//!
//! Every object has an interaction vector `rho`, used when it is the
//! predicted target, and a feature vector `alpha`, used when it sits in the
//! context of another object. An observation is Bernoulli with parameter
//! `sigmoid(rho_target . sum(alpha_context))`.

mod file;
pub use file::write_atomic;
mod objective;
mod table;
mod train;

use std::fmt;

use crate::corpus::NegativeDistribution;
use crate::error::{Error, Result};
use crate::slt::UNIT_GAP;

pub use file::{decode_model, encode_model, inspect_model, read_model, write_model, ModelHeader, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use objective::{
    bernoulli_param_equation, bernoulli_param_unit, bernoulli_param_word, bernoulli_param_word_units,
    equation_vector_from_units, group_loss_and_grads, nonempty_context_sum, pair_loss_and_grads, sigmoid, word_context_sum, SparseGrads,
    TrainingPair, LOG_EPSILON,
};
pub use table::{EmbeddingTable, ACCUMULATOR_FLOOR};
pub use train::{
    train, train_eqemb_u, train_pass_equations, train_pass_words, EpochRecord, PassTrace, TrainedModel,
    TrainingData, Trainer,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectClass {
    Word,
    Equation,
    Unit,
}

impl ObjectClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectClass::Word => "word",
            ObjectClass::Equation => "equation",
            ObjectClass::Unit => "unit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Rho,
    Alpha,
}

/// An object id tagged with its class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ItemRef {
    Word(u32),
    Equation(u32),
    Unit(u32),
}

impl ItemRef {
    pub fn class(self) -> ObjectClass {
        match self {
            ItemRef::Word(_) => ObjectClass::Word,
            ItemRef::Equation(_) => ObjectClass::Equation,
            ItemRef::Unit(_) => ObjectClass::Unit,
        }
    }

    pub fn id(self) -> u32 {
        match self {
            ItemRef::Word(id) | ItemRef::Equation(id) | ItemRef::Unit(id) => id,
        }
    }
}

/// A parameter row addressed by object and vector kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub item: ItemRef,
    pub param: Param,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Word-only Bernoulli embeddings; equations are ordinary tokens.
    Baseline,
    /// Equations as singleton tokens with word contexts.
    EqEmb,
    /// Equations as sentences of equation units.
    EqEmbU,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Baseline, Mode::EqEmb, Mode::EqEmbU];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::EqEmb => "eqemb",
            Mode::EqEmbU => "eqemb_u",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "baseline" | "b-emb" | "bemb" => Some(Mode::Baseline),
            "eqemb" => Some(Mode::EqEmb),
            "eqemb_u" | "eqemb-u" => Some(Mode::EqEmbU),
            _ => None,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Mode::Baseline => 0,
            Mode::EqEmb => 1,
            Mode::EqEmbU => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Mode::ALL.into_iter().find(|m| m.code() == code)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an in-window equation's units enter a word context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitContext {
    /// Every unit's feature vector is added.
    Sum,
    /// The unit feature vectors are averaged first.
    Mean,
}

impl UnitContext {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitContext::Sum => "sum",
            UnitContext::Mean => "mean",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sum" => Some(UnitContext::Sum),
            "mean" => Some(UnitContext::Mean),
            _ => None,
        }
    }
}

/// Training schedule for the unit model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitSchedule {
    /// Words first, then units with words frozen.
    TwoPass,
    /// Words and units in one pass.
    Joint,
}

impl UnitSchedule {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitSchedule::TwoPass => "two_pass",
            UnitSchedule::Joint => "joint",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "two_pass" => Some(UnitSchedule::TwoPass),
            "joint" => Some(UnitSchedule::Joint),
            _ => None,
        }
    }
}

/// Where a model's equation vectors come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquationProvenance {
    /// Trained as ordinary tokens of the word model.
    Token,
    /// Trained directly against word contexts.
    Direct,
    /// Averages of the equation's unit vectors.
    UnitAverage,
}

impl EquationProvenance {
    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Baseline => EquationProvenance::Token,
            Mode::EqEmb => EquationProvenance::Direct,
            Mode::EqEmbU => EquationProvenance::UnitAverage,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EquationProvenance::Token => "token",
            EquationProvenance::Direct => "direct",
            EquationProvenance::UnitAverage => "unit_average",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            EquationProvenance::Token => 0,
            EquationProvenance::Direct => 1,
            EquationProvenance::UnitAverage => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        [EquationProvenance::Token, EquationProvenance::Direct, EquationProvenance::UnitAverage]
            .into_iter()
            .find(|p| p.code() == code)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Embedding dimension.
    pub dim: usize,
    /// Word context window (positions, both sides together).
    pub word_window: usize,
    /// Window within which equations join a word's context.
    pub eq_window: usize,
    /// Window of words forming an equation's context.
    pub eq_context_window: usize,
    /// Window of units forming a unit's context.
    pub unit_window: usize,
    pub n_negatives: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Half-width of the uniform initialization; `None` means `0.5 / dim`.
    pub init_scale: Option<f64>,
    pub seed: u64,
    pub negatives: NegativeDistribution,
    pub unit_context: UnitContext,
    pub unit_schedule: UnitSchedule,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 50,
            word_window: 4,
            eq_window: 16,
            eq_context_window: 16,
            unit_window: 2,
            n_negatives: 10,
            learning_rate: 0.1,
            max_epochs: 20,
            init_scale: None,
            seed: 1,
            negatives: NegativeDistribution::Unigram,
            unit_context: UnitContext::Sum,
            unit_schedule: UnitSchedule::TwoPass,
        }
    }
}

impl ModelConfig {
    pub fn init_scale(&self) -> f64 {
        self.init_scale.unwrap_or(0.5 / self.dim as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let even = |name: &str, v: usize| {
            if v == 0 || !v.is_multiple_of(2) {
                Err(Error::Config(format!("{name} must be an even positive integer, got {v}")))
            } else {
                Ok(())
            }
        };
        even("word_window", self.word_window)?;
        even("eq_window", self.eq_window)?;
        even("eq_context_window", self.eq_context_window)?;
        even("unit_window", self.unit_window)?;
        if self.eq_window < self.word_window {
            return Err(Error::Config(format!(
                "eq_window ({}) must be at least word_window ({})",
                self.eq_window, self.word_window
            )));
        }
        if self.dim == 0 || self.n_negatives == 0 || self.max_epochs == 0 {
            return Err(Error::Config("dim, n_negatives and max_epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !self.init_scale().is_finite() || self.init_scale() <= 0.0 {
            return Err(Error::Config("learning_rate and init_scale must be positive".into()));
        }
        Ok(())
    }

    /// `key=value` lines, one per field, in a fixed order.
    pub fn to_kv(&self) -> String {
        let init = self.init_scale.map_or_else(|| "auto".to_string(), |s| format!("{s:?}"));
        format!(
            "k={}\nword_window={}\neq_window={}\neq_context_window={}\nunit_window={}\nn_negatives={}\n\
             learning_rate={:?}\nmax_epochs={}\ninit_scale={}\nseed={}\nnegative_distribution={}\n\
             unit_context={}\nunit_schedule={}\n",
            self.dim,
            self.word_window,
            self.eq_window,
            self.eq_context_window,
            self.unit_window,
            self.n_negatives,
            self.learning_rate,
            self.max_epochs,
            init,
            self.seed,
            self.negatives.as_str(),
            self.unit_context.as_str(),
            self.unit_schedule.as_str(),
        )
    }

    /// Apply one `key=value` setting. Unknown keys are reported as `Ok(false)`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value for {key}: {value:?}")))
        }
        match key {
            "k" | "dim" => self.dim = num(key, value)?,
            "word_window" => self.word_window = num(key, value)?,
            "eq_window" => self.eq_window = num(key, value)?,
            "eq_context_window" => self.eq_context_window = num(key, value)?,
            "unit_window" => self.unit_window = num(key, value)?,
            "n_negatives" => self.n_negatives = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "max_epochs" => self.max_epochs = num(key, value)?,
            "init_scale" => self.init_scale = if value == "auto" { None } else { Some(num(key, value)?) },
            "seed" => self.seed = num(key, value)?,
            "negative_distribution" => {
                self.negatives = NegativeDistribution::parse(value)
                    .ok_or_else(|| Error::Config(format!("invalid negative_distribution {value:?}")))?
            }
            "unit_context" => {
                self.unit_context = UnitContext::parse(value)
                    .ok_or_else(|| Error::Config(format!("invalid unit_context {value:?}")))?
            }
            "unit_schedule" => {
                self.unit_schedule = UnitSchedule::parse(value)
                    .ok_or_else(|| Error::Config(format!("invalid unit_schedule {value:?}")))?
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut config = ModelConfig::default();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {line:?}")))?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub mode: Mode,
    pub provenance: EquationProvenance,
    pub config: ModelConfig,
    pub words: EmbeddingTable,
    /// Trained directly (baseline, EqEmb) or derived from units (EqEmb-U).
    pub equations: EmbeddingTable,
    pub units: Option<EmbeddingTable>,
    /// Unit ids of each equation (gaps included); needed to score contexts
    /// in the unit model. Not stored in the model file.
    pub eq_units: Vec<Vec<u32>>,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.words.dim()
    }

    /// Attach equation unit sequences (e.g. from a corpus bundle) after
    /// loading a model file.
    pub fn with_eq_units(mut self, eq_units: Vec<Vec<u32>>) -> Self {
        self.eq_units = eq_units;
        self
    }

    pub fn tables(&self) -> Tables<'_> {
        let context = match self.mode {
            Mode::EqEmbU => ContextMode::EquationUnits,
            _ => ContextMode::EquationVectors,
        };
        Tables {
            words: &self.words,
            equations: Some(&self.equations),
            units: self.units.as_ref(),
            eq_units: &self.eq_units,
            unit_context: self.config.unit_context,
            context,
        }
    }
}

/// How equation items inside a word context are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextMode {
    /// Equations are dropped (the first, word-only training pass).
    WordsOnly,
    /// An equation contributes its own feature vector.
    EquationVectors,
    /// An equation contributes the feature vectors of its units.
    EquationUnits,
}

/// Read-only view of the parameter tables used by the objectives and the
/// evaluation scores.
#[derive(Debug, Clone, Copy)]
pub struct Tables<'a> {
    pub words: &'a EmbeddingTable,
    pub equations: Option<&'a EmbeddingTable>,
    pub units: Option<&'a EmbeddingTable>,
    pub eq_units: &'a [Vec<u32>],
    pub unit_context: UnitContext,
    pub context: ContextMode,
}

impl<'a> Tables<'a> {
    pub fn table(&self, class: ObjectClass) -> Result<&'a EmbeddingTable> {
        let missing = || Error::InvalidContext(format!("model has no {} table", class.as_str()));
        match class {
            ObjectClass::Word => Ok(self.words),
            ObjectClass::Equation => self.equations.ok_or_else(missing),
            ObjectClass::Unit => self.units.ok_or_else(missing),
        }
    }

    pub fn vector(&self, slot: Slot) -> Result<&'a [f64]> {
        self.table(slot.item.class())?.vector(slot.param, slot.item.id())
    }

    /// Unit ids of an equation with gaps removed.
    pub fn units_of(&self, eq: u32) -> Result<impl Iterator<Item = u32> + 'a> {
        let seq = self.eq_units.get(eq as usize).ok_or(Error::IdOutOfRange {
            class: "equation",
            id: eq,
            size: self.eq_units.len(),
        })?;
        Ok(seq.iter().copied().filter(|&u| u != UNIT_GAP))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_kv_round_trip() {
        let config = ModelConfig {
            dim: 25,
            init_scale: Some(0.03),
            learning_rate: 0.05,
            unit_context: UnitContext::Mean,
            ..ModelConfig::default()
        };
        assert_eq!(ModelConfig::from_kv(&config.to_kv()).unwrap(), config);
        assert_eq!(ModelConfig::from_kv(&ModelConfig::default().to_kv()).unwrap(), ModelConfig::default());
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let odd = ModelConfig {
            word_window: 3,
            ..ModelConfig::default()
        };
        assert!(odd.validate().is_err());
        let narrow = ModelConfig {
            word_window: 16,
            eq_window: 8,
            ..ModelConfig::default()
        };
        assert!(narrow.validate().is_err());
    }

    #[test]
    fn default_init_scale() {
        let c = ModelConfig {
            dim: 25,
            ..ModelConfig::default()
        };
        assert_eq!(c.init_scale(), 0.02);
    }
}
