#![allow(dead_code)]

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqemb::bundle::{ingest_documents, Bundle, IngestParams};
use eqemb::model::{
    group_loss_and_grads, ContextMode, EmbeddingTable, ItemRef, ModelConfig, ObjectClass, Tables, UnitContext,
};
use eqemb::retrieval::{Hit, Metric};
use eqemb::synth::{planted_corpus, PlantedCorpus, PlantedParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The planted-signal corpus and its ingested bundle.
pub fn planted() -> (PlantedCorpus, Bundle) {
    let corpus = planted_corpus(&PlantedParams::default());
    let bundle = ingest_documents(corpus.documents.clone(), &IngestParams::default()).unwrap();
    (corpus, bundle)
}

/// Training settings of the planted-corpus checks.
pub fn planted_config(seed: u64) -> ModelConfig {
    ModelConfig {
        dim: 25,
        word_window: 4,
        eq_window: 16,
        eq_context_window: 16,
        learning_rate: 0.02,
        seed,
        ..ModelConfig::default()
    }
}

/// Which of the three objectives a gradient instance exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameterization {
    /// Word target, context of words and equation vectors.
    WordWithEquations,
    /// Equation target, context of words.
    Equation,
    /// Word target whose equations expand into unit vectors.
    WordWithUnits(UnitContext),
    /// Unit target, context of units.
    Unit,
}

pub struct GradInstance {
    pub dim: usize,
    pub words: EmbeddingTable,
    pub equations: EmbeddingTable,
    pub units: EmbeddingTable,
    pub eq_units: Vec<Vec<u32>>,
    pub unit_context: UnitContext,
    pub mode: ContextMode,
    pub targets: Vec<(ItemRef, u8)>,
    pub context: Vec<ItemRef>,
}

impl GradInstance {
    pub fn tables<'a>(
        &'a self,
        words: &'a EmbeddingTable,
        equations: &'a EmbeddingTable,
        units: &'a EmbeddingTable,
    ) -> Tables<'a> {
        Tables {
            words,
            equations: Some(equations),
            units: Some(units),
            eq_units: &self.eq_units,
            unit_context: self.unit_context,
            context: self.mode,
        }
    }

    pub fn random(kind: Parameterization, rng: &mut ChaCha8Rng) -> Self {
        let dim = rng.random_range(1..=8);
        let (nw, ne, nu) = (rng.random_range(3..12), rng.random_range(2..6), rng.random_range(3..10));
        let words = EmbeddingTable::random(ObjectClass::Word, nw, dim, 0.5, rng);
        let equations = EmbeddingTable::random(ObjectClass::Equation, ne, dim, 0.5, rng);
        let units = EmbeddingTable::random(ObjectClass::Unit, nu, dim, 0.5, rng);
        let eq_units: Vec<Vec<u32>> = (0..ne)
            .map(|_| (0..rng.random_range(1..5)).map(|_| rng.random_range(0..nu as u32)).collect())
            .collect();
        let n_targets = rng.random_range(1..5);
        let target = |rng: &mut ChaCha8Rng, class: ObjectClass| -> ItemRef {
            match class {
                ObjectClass::Word => ItemRef::Word(rng.random_range(0..nw as u32)),
                ObjectClass::Equation => ItemRef::Equation(rng.random_range(0..ne as u32)),
                ObjectClass::Unit => ItemRef::Unit(rng.random_range(0..nu as u32)),
            }
        };
        let (target_class, mode, unit_context) = match kind {
            Parameterization::WordWithEquations => (ObjectClass::Word, ContextMode::EquationVectors, UnitContext::Sum),
            Parameterization::Equation => (ObjectClass::Equation, ContextMode::EquationVectors, UnitContext::Sum),
            Parameterization::WordWithUnits(u) => (ObjectClass::Word, ContextMode::EquationUnits, u),
            Parameterization::Unit => (ObjectClass::Unit, ContextMode::EquationUnits, UnitContext::Sum),
        };
        let targets = (0..n_targets)
            .map(|i| (target(rng, target_class), u8::from(i == 0)))
            .collect();
        let n_context = rng.random_range(1..6);
        let mut context: Vec<ItemRef> = (0..n_context)
            .map(|_| match kind {
                Parameterization::Unit => target(rng, ObjectClass::Unit),
                _ => target(rng, ObjectClass::Word),
            })
            .collect();
        if matches!(kind, Parameterization::WordWithEquations | Parameterization::WordWithUnits(_)) {
            for _ in 0..rng.random_range(1..3) {
                context.push(target(rng, ObjectClass::Equation));
            }
        }
        GradInstance {
            dim,
            words,
            equations,
            units,
            eq_units,
            unit_context,
            mode,
            targets,
            context,
        }
    }

    /// Relative error `|g - fd| / max(|g|, |fd|)` between the analytic
    /// gradient and central differences, over every parameter the loss
    /// touches. Returns 0 when both are exactly zero.
    pub fn relative_error(&self, h: f64) -> f64 {
        let t = self.tables(&self.words, &self.equations, &self.units);
        let (_, grads) = group_loss_and_grads(&self.targets, &self.context, &t).unwrap();
        let (mut diff, mut ga, mut gf) = (0.0f64, 0.0f64, 0.0f64);
        for (slot, g) in &grads {
            for k in 0..self.dim {
                let eval = |delta: f64| {
                    let (mut w, mut e, mut u) = (self.words.clone(), self.equations.clone(), self.units.clone());
                    let table = match slot.item.class() {
                        ObjectClass::Word => &mut w,
                        ObjectClass::Equation => &mut e,
                        ObjectClass::Unit => &mut u,
                    };
                    table.vector_mut(slot.param, slot.item.id()).unwrap()[k] += delta;
                    group_loss_and_grads(&self.targets, &self.context, &self.tables(&w, &e, &u))
                        .unwrap()
                        .0
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                diff += (g[k] - fd).powi(2);
                ga += g[k].powi(2);
                gf += fd.powi(2);
            }
        }
        let scale = ga.sqrt().max(gf.sqrt());
        if scale == 0.0 {
            0.0
        } else {
            diff.sqrt() / scale
        }
    }
}

pub const PARAMETERIZATIONS: [Parameterization; 5] = [
    Parameterization::WordWithEquations,
    Parameterization::Equation,
    Parameterization::WordWithUnits(UnitContext::Sum),
    Parameterization::WordWithUnits(UnitContext::Mean),
    Parameterization::Unit,
];

/// Exact rational value of a finite double.
pub fn rational(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite")
}

/// Whether `got` is within one ulp of the exact mean of `values`.
pub fn within_one_ulp_of_mean(values: &[f64], got: f64) -> bool {
    let sum = values.iter().fold(BigRational::zero(), |acc, &v| acc + rational(v));
    let exact = sum / BigRational::from_integer(BigInt::from(values.len()));
    let err = (rational(got) - &exact).abs();
    let ulp = rational(got.next_up()) - rational(got);
    let ulp_down = rational(got) - rational(got.next_down());
    err <= ulp.max(ulp_down)
}

/// Exhaustive scorer: every row scored independently, then sorted best
/// first with ties by ascending id.
pub fn brute_force(query: &[f64], matrix: &[f64], metric: Metric, k: usize, exclude: Option<u32>) -> Vec<Hit> {
    let dim = query.len();
    let mut all: Vec<Hit> = matrix
        .chunks(dim)
        .enumerate()
        .filter(|(i, _)| Some(*i as u32) != exclude)
        .map(|(i, row)| {
            let score = match metric {
                Metric::Euclidean => query.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
                Metric::Cosine => {
                    let d: f64 = query.iter().zip(row).map(|(a, b)| a * b).sum();
                    let na = query.iter().map(|a| a * a).sum::<f64>().sqrt();
                    let nb = row.iter().map(|b| b * b).sum::<f64>().sqrt();
                    if na == 0.0 || nb == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        d / (na * nb)
                    }
                }
            };
            Hit { id: i as u32, score }
        })
        .collect();
    all.sort_by(|a, b| {
        let primary = match metric {
            Metric::Cosine => b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal),
            Metric::Euclidean => a.score.partial_cmp(&b.score).unwrap_or(Ordering::Equal),
        };
        primary.then(a.id.cmp(&b.id))
    });
    all.truncate(k);
    all
}
