use std::collections::BTreeSet;
use std::time::Instant;

use log::{debug, info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{HeldOut, HeldOutItem, Item, NegativeSampler, TokenStream};
use crate::error::{Error, Result};
use crate::eval::{mean_predictive, EarlyStopping, StopDecision};
use crate::slt::{EquationUnits, UNIT_GAP};

use super::objective::group_loss_and_grads;
use super::{
    equation_vector_from_units, ContextMode, EmbeddingTable, EquationProvenance, ItemRef, Mode, Model, ModelConfig,
    ObjectClass, Param, Tables, UnitSchedule,
};

const STREAM_WORD_INIT: u64 = 0;
const STREAM_EQUATION_INIT: u64 = 1;
const STREAM_UNIT_INIT: u64 = 2;
const STREAM_FIRST_PASS: u64 = 3;
const STREAM_SECOND_PASS: u64 = 4;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Everything the training loops read: token streams, sampling
/// frequencies, equation units and the validation items.
#[derive(Debug, Clone, Default)]
pub struct TrainingData {
    pub streams: Vec<TokenStream>,
    /// Corpus frequency of each word id.
    pub word_freqs: Vec<u64>,
    pub n_equations: usize,
    /// Unit ids of each equation, gaps included. Empty without units.
    pub eq_units: Vec<Vec<u32>>,
    pub unit_freqs: Vec<u64>,
    pub validation: Vec<HeldOutItem>,
    /// (stream, position) of held-out words, never used as targets.
    pub excluded: BTreeSet<(usize, usize)>,
}

impl TrainingData {
    pub fn new(streams: Vec<TokenStream>, word_freqs: Vec<u64>, n_equations: usize) -> Self {
        TrainingData {
            streams,
            word_freqs,
            n_equations,
            ..TrainingData::default()
        }
    }

    pub fn with_units(mut self, units: &EquationUnits) -> Self {
        self.eq_units = units.sequences.clone();
        self.unit_freqs = units.vocabulary.freqs().to_vec();
        self
    }

    /// Use the validation split for early stopping and keep every held-out
    /// word out of the training targets.
    pub fn with_heldout(mut self, heldout: &HeldOut) -> Self {
        self.validation = heldout.validation.clone();
        self.excluded = heldout.excluded_positions();
        self
    }

    pub fn n_words(&self) -> usize {
        self.word_freqs.len()
    }

    pub fn n_units(&self) -> usize {
        self.unit_freqs.len()
    }

    fn has_units(&self) -> bool {
        !self.unit_freqs.is_empty()
    }
}

/// Which parameter rows a pass may update.
#[derive(Debug, Clone, Copy, Default)]
struct Trainable {
    word: [bool; 2],
    equation: [bool; 2],
    unit: [bool; 2],
}

impl Trainable {
    fn allows(&self, class: ObjectClass, param: Param) -> bool {
        let row = match class {
            ObjectClass::Word => self.word,
            ObjectClass::Equation => self.equation,
            ObjectClass::Unit => self.unit,
        };
        row[matches!(param, Param::Alpha) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PassKind {
    /// Words only; equations are treated as gaps.
    Words,
    /// Equations as ordinary tokens inside the word window.
    Baseline,
    /// Equation vectors against frozen words.
    Equations,
    /// Unit vectors against frozen words.
    Units,
    /// Words and units together.
    Joint,
}

impl PassKind {
    fn name(self) -> &'static str {
        match self {
            PassKind::Words => "words",
            PassKind::Baseline => "baseline",
            PassKind::Equations => "equations",
            PassKind::Units => "units",
            PassKind::Joint => "joint",
        }
    }

    fn view(self) -> ContextMode {
        match self {
            PassKind::Words => ContextMode::WordsOnly,
            PassKind::Baseline | PassKind::Equations => ContextMode::EquationVectors,
            PassKind::Units | PassKind::Joint => ContextMode::EquationUnits,
        }
    }

    fn trainable(self) -> Trainable {
        let both = [true, true];
        let none = [false, false];
        match self {
            PassKind::Words => Trainable {
                word: both,
                ..Trainable::default()
            },
            PassKind::Baseline => Trainable {
                word: both,
                equation: both,
                unit: none,
            },
            PassKind::Equations => Trainable {
                equation: both,
                ..Trainable::default()
            },
            PassKind::Units | PassKind::Joint => Trainable {
                word: [self == PassKind::Joint; 2],
                unit: both,
                ..Trainable::default()
            },
        }
    }

    fn rng_stream(self) -> u64 {
        match self {
            PassKind::Words | PassKind::Baseline | PassKind::Joint => STREAM_FIRST_PASS,
            PassKind::Equations | PassKind::Units => STREAM_SECOND_PASS,
        }
    }
}

/// One line of the training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub pass: &'static str,
    pub epoch: usize,
    /// Mean validation predictive log-likelihood, if any item was scored.
    pub validation: Option<f64>,
    /// Mean training loss per positive pair.
    pub loss: f64,
    pub positives: usize,
    pub wall_secs: f64,
}

impl EpochRecord {
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "pass": self.pass,
            "epoch": self.epoch,
            "validation": self.validation,
            "loss": self.loss,
            "positives": self.positives,
            "wall_secs": self.wall_secs,
        })
        .to_string()
    }
}

/// Epochs of one pass and the epoch whose parameters were kept.
#[derive(Debug, Clone, PartialEq)]
pub struct PassTrace {
    pub pass: &'static str,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl PassTrace {
    pub fn scores(&self) -> Vec<f64> {
        self.epochs.iter().filter_map(|e| e.validation).collect()
    }
}

#[derive(Debug, Clone)]
struct State {
    words: EmbeddingTable,
    equations: EmbeddingTable,
    units: Option<EmbeddingTable>,
}

impl State {
    fn table_mut(&mut self, class: ObjectClass) -> Result<&mut EmbeddingTable> {
        match class {
            ObjectClass::Word => Ok(&mut self.words),
            ObjectClass::Equation => Ok(&mut self.equations),
            ObjectClass::Unit => self
                .units
                .as_mut()
                .ok_or_else(|| Error::InvalidContext("no unit table".into())),
        }
    }

    fn is_finite(&self) -> bool {
        self.words.is_finite() && self.equations.is_finite() && self.units.as_ref().is_none_or(|u| u.is_finite())
    }
}

struct Samplers {
    words: NegativeSampler,
    equations: NegativeSampler,
    units: NegativeSampler,
}

/// Runs the training passes of one mode and keeps the last good
/// parameters when a pass diverges.
pub struct Trainer<'d> {
    data: &'d TrainingData,
    mode: Mode,
    config: ModelConfig,
    state: State,
    samplers: Samplers,
    traces: Vec<PassTrace>,
    untokenizable: usize,
}

impl<'d> Trainer<'d> {
    pub fn new(data: &'d TrainingData, mode: Mode, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        if data.n_words() == 0 {
            return Err(Error::EmptyCorpus);
        }
        if mode == Mode::EqEmbU && data.n_equations > 0 && !data.has_units() {
            return Err(Error::Config("the unit model needs equation unit sequences".into()));
        }
        let scale = config.init_scale();
        let words = EmbeddingTable::random(
            ObjectClass::Word,
            data.n_words(),
            config.dim,
            scale,
            &mut rng_for(config.seed, STREAM_WORD_INIT),
        );
        let (equations, units) = match mode {
            Mode::Baseline | Mode::EqEmb => (
                EmbeddingTable::random(
                    ObjectClass::Equation,
                    data.n_equations,
                    config.dim,
                    scale,
                    &mut rng_for(config.seed, STREAM_EQUATION_INIT),
                ),
                None,
            ),
            Mode::EqEmbU => (
                EmbeddingTable::zeros(ObjectClass::Equation, data.n_equations, config.dim),
                Some(EmbeddingTable::random(
                    ObjectClass::Unit,
                    data.n_units(),
                    config.dim,
                    scale,
                    &mut rng_for(config.seed, STREAM_UNIT_INIT),
                )),
            ),
        };
        let samplers = Samplers {
            words: NegativeSampler::new(&data.word_freqs, config.negatives),
            equations: NegativeSampler::uniform_over(data.n_equations, &active_equations(data, mode, &config)),
            units: NegativeSampler::new(&data.unit_freqs, config.negatives),
        };
        Ok(Trainer {
            data,
            mode,
            config,
            state: State {
                words,
                equations,
                units,
            },
            samplers,
            traces: Vec::new(),
            untokenizable: 0,
        })
    }

    /// Run every pass of the mode. On divergence the parameters of the last
    /// good epoch stay in place and the error is returned.
    pub fn run(&mut self) -> Result<()> {
        let has_equations = self.data.n_equations > 0;
        match self.mode {
            Mode::Baseline => self.run_pass(PassKind::Baseline)?,
            Mode::EqEmb => {
                self.run_pass(PassKind::Words)?;
                if has_equations {
                    self.state.words.set_frozen(true);
                    let result = self.run_pass(PassKind::Equations);
                    self.state.words.set_frozen(false);
                    result?;
                }
            }
            Mode::EqEmbU => {
                match self.config.unit_schedule {
                    UnitSchedule::TwoPass => {
                        self.run_pass(PassKind::Words)?;
                        if has_equations {
                            self.state.words.set_frozen(true);
                            let result = self.run_pass(PassKind::Units);
                            self.state.words.set_frozen(false);
                            result?;
                        }
                    }
                    UnitSchedule::Joint => self.run_pass(PassKind::Joint)?,
                }
                self.derive_equations()?;
            }
        }
        Ok(())
    }

    pub fn traces(&self) -> &[PassTrace] {
        &self.traces
    }

    pub fn epochs_run(&self) -> usize {
        self.traces.iter().map(|t| t.epochs.len()).sum()
    }

    /// Equations whose unit list was empty (their vectors are zero).
    pub fn untokenizable(&self) -> usize {
        self.untokenizable
    }

    /// The current (last good) parameters as a model.
    pub fn model(&self) -> Model {
        self.clone_model()
    }

    pub fn into_model(self) -> Model {
        let eq_units = if self.mode == Mode::EqEmbU {
            self.data.eq_units.clone()
        } else {
            Vec::new()
        };
        Model {
            mode: self.mode,
            provenance: EquationProvenance::for_mode(self.mode),
            config: self.config,
            words: self.state.words,
            equations: self.state.equations,
            units: self.state.units,
            eq_units,
        }
    }

    fn clone_model(&self) -> Model {
        Model {
            mode: self.mode,
            provenance: EquationProvenance::for_mode(self.mode),
            config: self.config.clone(),
            words: self.state.words.clone(),
            equations: self.state.equations.clone(),
            units: self.state.units.clone(),
            eq_units: if self.mode == Mode::EqEmbU {
                self.data.eq_units.clone()
            } else {
                Vec::new()
            },
        }
    }

    fn derive_equations(&mut self) -> Result<()> {
        let Some(units) = &self.state.units else {
            return Ok(());
        };
        let dim = self.config.dim;
        let mut rho = vec![0.0; self.data.n_equations * dim];
        let mut alpha = vec![0.0; self.data.n_equations * dim];
        self.untokenizable = 0;
        for e in 0..self.data.n_equations {
            let ids: Vec<u32> = self
                .data
                .eq_units
                .get(e)
                .into_iter()
                .flatten()
                .copied()
                .filter(|&u| u != UNIT_GAP)
                .collect();
            match equation_vector_from_units(&ids, units) {
                Ok((a, r)) => {
                    alpha[e * dim..(e + 1) * dim].copy_from_slice(&a);
                    rho[e * dim..(e + 1) * dim].copy_from_slice(&r);
                }
                Err(Error::UntokenizableEquation) => self.untokenizable += 1,
                Err(err) => return Err(err),
            }
        }
        if self.untokenizable > 0 {
            warn!("{} untokenizable equations get zero vectors", self.untokenizable);
        }
        self.state.equations = EmbeddingTable::from_matrices(ObjectClass::Equation, dim, rho, alpha)?;
        Ok(())
    }

    fn tables(&self, context: ContextMode) -> Tables<'_> {
        Tables {
            words: &self.state.words,
            equations: Some(&self.state.equations),
            units: self.state.units.as_ref(),
            eq_units: &self.data.eq_units,
            unit_context: self.config.unit_context,
            context,
        }
    }

    fn validation_score(&self, kind: PassKind) -> Option<f64> {
        mean_predictive(&self.data.validation, &self.tables(kind.view())).mean
    }

    fn run_pass(&mut self, kind: PassKind) -> Result<()> {
        let mut rng = rng_for(self.config.seed, kind.rng_stream());
        let mut controller = EarlyStopping::new(self.config.max_epochs);
        let mut trace = PassTrace {
            pass: kind.name(),
            epochs: Vec::new(),
            best_epoch: 0,
        };
        for epoch in 1..=self.config.max_epochs {
            let started = Instant::now();
            let snapshot = self.state.clone();
            let (loss, positives) = match self.epoch(kind, &mut rng) {
                Ok(stats) => stats,
                Err(e) => {
                    self.state = snapshot;
                    self.traces.push(trace);
                    return Err(e);
                }
            };
            let validation = self.validation_score(kind);
            let diverged = !self.state.is_finite()
                || !loss.is_finite()
                || validation.is_some_and(|v| v.is_nan())
                || (validation.is_none() && !self.data.validation.is_empty() && epoch > 1);
            let record = EpochRecord {
                pass: kind.name(),
                epoch,
                validation,
                loss,
                positives,
                wall_secs: started.elapsed().as_secs_f64(),
            };
            debug!("{}", record.to_json());
            trace.epochs.push(record);
            if diverged {
                self.state = snapshot;
                trace.best_epoch = epoch - 1;
                self.traces.push(trace);
                return Err(Error::Divergence {
                    pass: kind.name(),
                    epoch,
                });
            }
            match validation {
                Some(score) => match controller.observe(score) {
                    StopDecision::Continue => {}
                    StopDecision::Stop { best_epoch } => {
                        if best_epoch < epoch {
                            self.state = snapshot;
                        }
                        trace.best_epoch = best_epoch;
                        break;
                    }
                },
                None => trace.best_epoch = epoch,
            }
            trace.best_epoch = epoch;
        }
        info!(
            "pass {}: {} epochs, kept epoch {}",
            kind.name(),
            trace.epochs.len(),
            trace.best_epoch
        );
        self.traces.push(trace);
        Ok(())
    }

    /// One sweep over the corpus in document order. Returns the mean loss
    /// per positive and the number of positives.
    fn epoch(&mut self, kind: PassKind, rng: &mut ChaCha8Rng) -> Result<(f64, usize)> {
        let data = self.data;
        let word_half = self.config.word_window / 2;
        let eq_half = self.config.eq_window / 2;
        let eq_ctx_half = self.config.eq_context_window / 2;
        let unit_half = self.config.unit_window / 2;
        let mut total = 0.0;
        let mut positives = 0;
        let mut context: Vec<ItemRef> = Vec::new();
        let mut negatives: Vec<u32> = Vec::new();

        for (d, stream) in data.streams.iter().enumerate() {
            for (p, &item) in stream.items.iter().enumerate() {
                match item {
                    Item::Gap => {}
                    Item::Word(w) => {
                        if data.excluded.contains(&(d, p)) {
                            continue;
                        }
                        context.clear();
                        match kind {
                            PassKind::Words => {
                                context.extend(stream.words_around(p, word_half).map(ItemRef::Word));
                            }
                            PassKind::Baseline => {
                                context.extend(stream.window(p, word_half).filter_map(|(_, i)| match i {
                                    Item::Word(x) => Some(ItemRef::Word(x)),
                                    Item::Equation(e) => Some(ItemRef::Equation(e)),
                                    Item::Gap => None,
                                }));
                            }
                            PassKind::Equations | PassKind::Units | PassKind::Joint => {
                                let before = context.len();
                                context.extend(stream.equations_around(p, eq_half).map(ItemRef::Equation));
                                if context.len() == before && kind != PassKind::Joint {
                                    continue;
                                }
                                context.extend(stream.words_around(p, word_half).map(ItemRef::Word));
                            }
                        }
                        self.samplers.words.sample_into(rng, w, self.config.n_negatives, &mut negatives);
                        let targets = targets(ItemRef::Word(w), &negatives, ItemRef::Word);
                        if let Some(loss) = self.step(kind, &targets, &context)? {
                            total += loss;
                            positives += 1;
                        }
                    }
                    Item::Equation(e) => match kind {
                        PassKind::Words => {}
                        PassKind::Baseline | PassKind::Equations => {
                            context.clear();
                            if kind == PassKind::Baseline {
                                context.extend(stream.window(p, word_half).filter_map(|(_, i)| match i {
                                    Item::Word(x) => Some(ItemRef::Word(x)),
                                    Item::Equation(x) => Some(ItemRef::Equation(x)),
                                    Item::Gap => None,
                                }));
                            } else {
                                context.extend(stream.words_around(p, eq_ctx_half).map(ItemRef::Word));
                            }
                            self.samplers
                                .equations
                                .sample_into(rng, e, self.config.n_negatives, &mut negatives);
                            let targets = targets(ItemRef::Equation(e), &negatives, ItemRef::Equation);
                            if let Some(loss) = self.step(kind, &targets, &context)? {
                                total += loss;
                                positives += 1;
                            }
                        }
                        PassKind::Units | PassKind::Joint => {
                            let seq = data.eq_units.get(e as usize).map_or(&[][..], Vec::as_slice);
                            for (j, &u) in seq.iter().enumerate() {
                                if u == UNIT_GAP {
                                    continue;
                                }
                                let lo = j.saturating_sub(unit_half);
                                let hi = (j + unit_half).min(seq.len() - 1);
                                context.clear();
                                context.extend(
                                    (lo..=hi)
                                        .filter(|&k| k != j && seq[k] != UNIT_GAP)
                                        .map(|k| ItemRef::Unit(seq[k])),
                                );
                                self.samplers.units.sample_into(rng, u, self.config.n_negatives, &mut negatives);
                                let targets = targets(ItemRef::Unit(u), &negatives, ItemRef::Unit);
                                if let Some(loss) = self.step(kind, &targets, &context)? {
                                    total += loss;
                                    positives += 1;
                                }
                            }
                        }
                    },
                }
            }
        }
        let mean = if positives > 0 { total / positives as f64 } else { 0.0 };
        Ok((mean, positives))
    }

    /// One SGD step on a positive and its negatives. Returns `None` for an
    /// empty context, which is skipped.
    fn step(&mut self, kind: PassKind, targets: &[(ItemRef, u8)], context: &[ItemRef]) -> Result<Option<f64>> {
        if context.is_empty() {
            return Ok(None);
        }
        let (loss, grads) = match group_loss_and_grads(targets, context, &self.tables(kind.view())) {
            Ok(out) => out,
            Err(Error::InvalidContext(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let trainable = kind.trainable();
        let lr = self.config.learning_rate;
        for (slot, grad) in grads {
            let class = slot.item.class();
            if trainable.allows(class, slot.param) {
                self.state.table_mut(class)?.adagrad_step(slot.param, slot.item.id(), &grad, lr)?;
            }
        }
        Ok(Some(loss))
    }
}

/// Equations that are the target of at least one training pair. Only these
/// serve as negative samples, so an equation that never has a context keeps
/// its initial vectors.
fn active_equations(data: &TrainingData, mode: Mode, config: &ModelConfig) -> Vec<u32> {
    let mut active = BTreeSet::new();
    for stream in &data.streams {
        for (p, item) in stream.items.iter().enumerate() {
            let Item::Equation(e) = *item else { continue };
            let has_context = match mode {
                Mode::Baseline => stream
                    .window(p, config.word_window / 2)
                    .any(|(_, i)| !matches!(i, Item::Gap)),
                _ => stream.words_around(p, config.eq_context_window / 2).next().is_some(),
            };
            if has_context {
                active.insert(e);
            }
        }
    }
    active.into_iter().collect()
}

fn targets(positive: ItemRef, negatives: &[u32], wrap: fn(u32) -> ItemRef) -> Vec<(ItemRef, u8)> {
    std::iter::once((positive, 1))
        .chain(negatives.iter().map(|&n| (wrap(n), 0)))
        .collect()
}

/// A fitted model with the trace of every pass.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model,
    pub traces: Vec<PassTrace>,
    pub untokenizable: usize,
}

/// Train a model of the given mode.
pub fn train(data: &TrainingData, mode: Mode, config: &ModelConfig) -> Result<TrainedModel> {
    let mut trainer = Trainer::new(data, mode, config.clone())?;
    trainer.run()?;
    let traces = trainer.traces().to_vec();
    let untokenizable = trainer.untokenizable();
    Ok(TrainedModel {
        model: trainer.into_model(),
        traces,
        untokenizable,
    })
}

/// First pass: fit word vectors with equations ignored.
pub fn train_pass_words(data: &TrainingData, config: &ModelConfig) -> Result<(EmbeddingTable, PassTrace)> {
    let mut trainer = Trainer::new(data, Mode::EqEmb, config.clone())?;
    trainer.run_pass(PassKind::Words)?;
    let trace = trainer.traces.pop().expect("pass recorded");
    Ok((trainer.state.words, trace))
}

/// Second pass: fit equation vectors against a frozen word table, starting
/// from `equations`.
pub fn train_pass_equations(
    data: &TrainingData,
    config: &ModelConfig,
    words: &EmbeddingTable,
    equations: EmbeddingTable,
) -> Result<(EmbeddingTable, PassTrace)> {
    if !words.is_frozen() {
        return Err(Error::Config("the word table must be frozen for the equation pass".into()));
    }
    let mut trainer = Trainer::new(data, Mode::EqEmb, config.clone())?;
    trainer.state.words = words.clone();
    trainer.state.equations = equations;
    trainer.run_pass(PassKind::Equations)?;
    let trace = trainer.traces.pop().expect("pass recorded");
    Ok((trainer.state.equations, trace))
}

/// The unit model: word and unit vectors, with equation vectors derived
/// as unit averages.
pub fn train_eqemb_u(data: &TrainingData, config: &ModelConfig) -> Result<TrainedModel> {
    train(data, Mode::EqEmbU, config)
}
