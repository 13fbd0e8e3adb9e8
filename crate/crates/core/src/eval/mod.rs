//! Held-out scores, the early-stopping rule and grid model selection.

mod grid;

use std::fmt;

use crate::corpus::{HeldOutItem, Item, Split};
use crate::error::Result;
use crate::model::{nonempty_context_sum, sigmoid, ItemRef, Model, Param, Slot, Tables};
use crate::numeric::{dot, CompensatedSum};

pub use grid::{grid_configs, grid_select, write_grid_report, GridPoint, GridRow, GRID_REPORT_HEADER};

/// Probabilities entering a logarithm are clamped to `[EPSILON, 1 - EPSILON]`.
pub const EPSILON: f64 = 1e-12;

/// How the probabilities inside the pseudo log-likelihood are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PseudoReading {
    /// Independent Bernoulli probabilities `sigmoid(rho . ctx)`.
    #[default]
    Bernoulli,
    /// Softmax over the target and its negatives.
    Softmax,
}

impl PseudoReading {
    pub fn as_str(self) -> &'static str {
        match self {
            PseudoReading::Bernoulli => "bernoulli",
            PseudoReading::Softmax => "softmax",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bernoulli" => Some(PseudoReading::Bernoulli),
            "softmax" => Some(PseudoReading::Softmax),
            _ => None,
        }
    }
}

/// Log of the softmax weight of `target` among `target` and `negatives`.
pub fn softmax_log_likelihood(target: f64, negatives: &[f64]) -> f64 {
    let max = negatives.iter().copied().fold(target, f64::max);
    let mut denom = CompensatedSum::default();
    denom.add((target - max).exp());
    for &s in negatives {
        denom.add((s - max).exp());
    }
    (target - max) - denom.value().ln()
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(EPSILON, 1.0 - EPSILON)
}

/// `log p(target) + mean_j log(1 - p(negative_j))` from raw scores.
pub fn pseudo_log_likelihood_from_scores(target: f64, negatives: &[f64], reading: PseudoReading) -> f64 {
    let (p_target, p_negatives): (f64, Vec<f64>) = match reading {
        PseudoReading::Bernoulli => (sigmoid(target), negatives.iter().map(|&s| sigmoid(s)).collect()),
        PseudoReading::Softmax => {
            let log_z = target - softmax_log_likelihood(target, negatives);
            ((target - log_z).exp(), negatives.iter().map(|&s| (s - log_z).exp()).collect())
        }
    };
    let mut total = clamp_probability(p_target).ln();
    if !p_negatives.is_empty() {
        let mut acc = CompensatedSum::default();
        for p in p_negatives {
            acc.add((1.0 - clamp_probability(p)).ln());
        }
        total += acc.value() / negatives.len() as f64;
    }
    total
}

/// Context of a held-out item as model items.
pub fn item_context(item: &HeldOutItem) -> Vec<ItemRef> {
    item.context
        .iter()
        .filter_map(|i| match *i {
            Item::Word(w) => Some(ItemRef::Word(w)),
            Item::Equation(e) => Some(ItemRef::Equation(e)),
            Item::Gap => None,
        })
        .collect()
}

/// Scores `rho . ctx` of the target and of each negative.
fn item_scores(item: &HeldOutItem, tables: &Tables<'_>) -> Result<(f64, Vec<f64>)> {
    let ctx = nonempty_context_sum(&item_context(item), tables)?;
    let score = |w: u32| -> Result<f64> {
        let rho = tables.vector(Slot {
            item: ItemRef::Word(w),
            param: Param::Rho,
        })?;
        Ok(dot(rho, &ctx))
    };
    let target = score(item.target)?;
    let negatives = item.negatives.iter().map(|&w| score(w)).collect::<Result<Vec<_>>>()?;
    Ok((target, negatives))
}

/// Softmax predictive log-likelihood of a held-out word.
pub fn predictive_log_likelihood(item: &HeldOutItem, tables: &Tables<'_>) -> Result<f64> {
    let (target, negatives) = item_scores(item, tables)?;
    Ok(softmax_log_likelihood(target, &negatives))
}

/// Pseudo log-likelihood of a held-out word.
pub fn pseudo_log_likelihood(item: &HeldOutItem, tables: &Tables<'_>, reading: PseudoReading) -> Result<f64> {
    let (target, negatives) = item_scores(item, tables)?;
    Ok(pseudo_log_likelihood_from_scores(target, &negatives, reading))
}

/// Mean of per-item scores; items that cannot be scored are counted apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSummary {
    pub mean: Option<f64>,
    pub scored: usize,
    pub skipped: usize,
}

pub fn mean_score<F>(items: &[HeldOutItem], mut score: F) -> ScoreSummary
where
    F: FnMut(&HeldOutItem) -> Result<f64>,
{
    let mut acc = CompensatedSum::default();
    let (mut scored, mut skipped) = (0, 0);
    for item in items {
        match score(item) {
            Ok(s) => {
                acc.add(s);
                scored += 1;
            }
            Err(_) => skipped += 1,
        }
    }
    ScoreSummary {
        mean: (scored > 0).then(|| acc.value() / scored as f64),
        scored,
        skipped,
    }
}

pub fn mean_predictive(items: &[HeldOutItem], tables: &Tables<'_>) -> ScoreSummary {
    mean_score(items, |i| predictive_log_likelihood(i, tables))
}

pub fn mean_pseudo(items: &[HeldOutItem], tables: &Tables<'_>, reading: PseudoReading) -> ScoreSummary {
    mean_score(items, |i| pseudo_log_likelihood(i, tables, reading))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub split: Split,
    pub predictive: Option<f64>,
    pub pseudo: Option<f64>,
    pub items: usize,
    pub skipped: usize,
    pub config: String,
}

impl EvalReport {
    pub fn new(model: &Model, items: &[HeldOutItem], split: Split, reading: PseudoReading) -> Self {
        let tables = model.tables();
        let predictive = mean_predictive(items, &tables);
        let pseudo = mean_pseudo(items, &tables, reading);
        EvalReport {
            split,
            predictive: predictive.mean,
            pseudo: pseudo.mean,
            items: pseudo.scored,
            skipped: pseudo.skipped,
            config: format!("mode={}\n{}pseudo_ll={}\n", model.mode, model.config.to_kv(), reading.as_str()),
        }
    }
}

pub(crate) fn fmt_score(score: Option<f64>) -> String {
    score.map_or_else(|| "NA".to_string(), |s| format!("{s:.6}"))
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\tpredictive={}\tpseudo={}\titems={}\tskipped={}",
            self.split.as_str(),
            fmt_score(self.predictive),
            fmt_score(self.pseudo),
            self.items,
            self.skipped
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    /// Stop; keep the model as it was after `best_epoch` (1-based).
    Stop { best_epoch: usize },
}

/// Stops at the first epoch whose validation score does not improve on
/// the previous epoch's, or at the epoch cap.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    max_epochs: usize,
    epoch: usize,
    previous: Option<f64>,
}

impl EarlyStopping {
    pub fn new(max_epochs: usize) -> Self {
        EarlyStopping {
            max_epochs,
            epoch: 0,
            previous: None,
        }
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn observe(&mut self, score: f64) -> StopDecision {
        self.epoch += 1;
        if let Some(prev) = self.previous {
            // ties and NaN both count as no improvement
            if !(score > prev) {
                return StopDecision::Stop {
                    best_epoch: self.epoch - 1,
                };
            }
        }
        self.previous = Some(score);
        if self.epoch >= self.max_epochs {
            StopDecision::Stop { best_epoch: self.epoch }
        } else {
            StopDecision::Continue
        }
    }
}

/// Replay a trace through [`EarlyStopping`]. Returns `(epochs_run,
/// best_epoch)`; a trace that ends without a stop keeps its last epoch.
pub fn early_stopping_controller(trace: &[f64], max_epochs: usize) -> (usize, usize) {
    let mut controller = EarlyStopping::new(max_epochs);
    for &score in trace {
        if let StopDecision::Stop { best_epoch } = controller.observe(score) {
            return (controller.epoch(), best_epoch);
        }
    }
    (controller.epoch(), controller.epoch())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContextMode, EmbeddingTable, ObjectClass, UnitContext};

    #[test]
    fn stopping_rule() {
        assert_eq!(early_stopping_controller(&[-3.0, -2.0, -2.5], 20), (3, 2));
        let rising: Vec<f64> = (0..25).map(|i| -30.0 + i as f64).collect();
        assert_eq!(early_stopping_controller(&rising, 20), (20, 20));
        assert_eq!(early_stopping_controller(&[-3.0, -3.0], 20), (2, 1));
        assert_eq!(early_stopping_controller(&[-1.0], 1), (1, 1));
        assert_eq!(early_stopping_controller(&[-2.0, f64::NAN], 20), (2, 1));
    }

    #[test]
    fn softmax_limits() {
        let uniform = softmax_log_likelihood(0.3, &[0.3; 4]);
        assert_eq!(uniform, (1.0f64 / 5.0).ln());
        let saturated = softmax_log_likelihood(50.0, &[0.0, 0.0]);
        assert!(saturated <= 0.0 && saturated > -1e-15 * 1e2);
        assert!(softmax_log_likelihood(1e300, &[-1e300]).is_finite());
    }

    #[test]
    fn pseudo_limits() {
        let zero = pseudo_log_likelihood_from_scores(0.0, &[0.0, 0.0], PseudoReading::Bernoulli);
        assert!((zero + 2.0 * 2f64.ln()).abs() < 1e-15);
        let perfect = pseudo_log_likelihood_from_scores(60.0, &[-60.0, -60.0], PseudoReading::Bernoulli);
        assert!(perfect <= 0.0 && perfect > -1e-11);
        let only_target = pseudo_log_likelihood_from_scores(0.0, &[], PseudoReading::Bernoulli);
        assert_eq!(only_target, 0.5f64.ln());
    }

    #[test]
    fn empty_context_is_skipped() {
        let words = EmbeddingTable::zeros(ObjectClass::Word, 3, 2);
        let tables = Tables {
            words: &words,
            equations: None,
            units: None,
            eq_units: &[],
            unit_context: UnitContext::Sum,
            context: ContextMode::WordsOnly,
        };
        let item = HeldOutItem {
            eq_id: 0,
            doc: 0,
            position: 0,
            target: 0,
            context: vec![Item::Equation(0)],
            negatives: vec![1, 2],
            split: Split::Validation,
        };
        let summary = mean_predictive(std::slice::from_ref(&item), &tables);
        assert_eq!((summary.mean, summary.scored, summary.skipped), (None, 0, 1));
        let ok = HeldOutItem {
            context: vec![Item::Word(1), Item::Equation(0)],
            ..item
        };
        let uniform = predictive_log_likelihood(&ok, &tables).unwrap();
        assert_eq!(uniform, (1.0f64 / 3.0).ln());
    }
}
