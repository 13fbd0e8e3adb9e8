//! Held-out validation and test items built around equations.

use std::collections::BTreeSet;

use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EquationRegistry, Item, TokenStream, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Validation => "valid",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeDistribution {
    /// Proportional to corpus frequency.
    Unigram,
    Uniform,
}

impl NegativeDistribution {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unigram" => Some(NegativeDistribution::Unigram),
            "uniform" => Some(NegativeDistribution::Uniform),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NegativeDistribution::Unigram => "unigram",
            NegativeDistribution::Uniform => "uniform",
        }
    }
}

/// Draws negative ids from `0..n` under a fixed distribution, never
/// returning the excluded id.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    len: usize,
    weights: Option<WeightedIndex<f64>>,
    /// Number of ids with positive probability, and the first of them.
    support: usize,
    first: u32,
}

impl NegativeSampler {
    pub fn new(freqs: &[u64], distribution: NegativeDistribution) -> Self {
        if distribution == NegativeDistribution::Uniform {
            return Self::uniform(freqs.len());
        }
        let support = freqs.iter().filter(|&&f| f > 0).count();
        let first = freqs.iter().position(|&f| f > 0).unwrap_or(0) as u32;
        NegativeSampler {
            len: freqs.len(),
            weights: WeightedIndex::new(freqs.iter().map(|&f| f as f64)).ok(),
            support,
            first,
        }
    }

    pub fn uniform(len: usize) -> Self {
        NegativeSampler {
            len,
            weights: None,
            support: len,
            first: 0,
        }
    }

    /// Uniform over the ids in `ids` (out of `0..len`).
    pub fn uniform_over(len: usize, ids: &[u32]) -> Self {
        let mut weights = vec![0u64; len];
        for &id in ids {
            if let Some(w) = weights.get_mut(id as usize) {
                *w = 1;
            }
        }
        Self::new(&weights, NegativeDistribution::Unigram)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// True when at least one id other than `exclude` can be drawn.
    pub fn can_sample_excluding(&self, exclude: u32) -> bool {
        self.support > 1 || (self.support == 1 && exclude != self.first)
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> u32 {
        match &self.weights {
            Some(w) => w.sample(rng) as u32,
            None => rng.random_range(0..self.len as u32),
        }
    }

    /// `count` draws with replacement, each different from `exclude`.
    /// Returns an empty list when no other id exists.
    pub fn sample_excluding<R: Rng>(&self, rng: &mut R, exclude: u32, count: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(count);
        self.sample_into(rng, exclude, count, &mut out);
        out
    }

    pub fn sample_into<R: Rng>(&self, rng: &mut R, exclude: u32, count: usize, out: &mut Vec<u32>) {
        out.clear();
        if !self.can_sample_excluding(exclude) {
            return;
        }
        while out.len() < count {
            let id = self.draw(rng);
            if id != exclude {
                out.push(id);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeldoutParams {
    /// Held-out words per equation in each split.
    pub per_equation: usize,
    /// Size of the held-out word's own context window.
    pub context_window: usize,
    /// Window around an equation from which held-out words are drawn.
    pub candidate_window: usize,
    pub n_negatives: usize,
    pub negatives: NegativeDistribution,
    /// Restrict the equation set to this many randomly chosen singletons
    /// plus every repeated equation. `None` keeps every equation.
    pub singleton_sample: Option<usize>,
    pub seed: u64,
}

impl Default for HeldoutParams {
    fn default() -> Self {
        HeldoutParams {
            per_equation: 2,
            context_window: 4,
            candidate_window: 16,
            n_negatives: 10,
            negatives: NegativeDistribution::Uniform,
            singleton_sample: None,
            seed: 1,
        }
    }
}

/// A held-out word with its context (which includes the equation) and its
/// fixed negative samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeldOutItem {
    pub eq_id: u32,
    /// Index of the stream the word was taken from.
    pub doc: usize,
    pub position: usize,
    pub target: u32,
    /// Word ids followed by the equation.
    pub context: Vec<Item>,
    pub negatives: Vec<u32>,
    pub split: Split,
}

impl HeldOutItem {
    pub fn context_words(&self) -> impl Iterator<Item = u32> + '_ {
        self.context.iter().filter_map(|i| match i {
            Item::Word(w) => Some(*w),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeldOut {
    pub validation: Vec<HeldOutItem>,
    pub test: Vec<HeldOutItem>,
    /// Equations skipped for lack of surrounding words.
    pub skipped: usize,
}

impl HeldOut {
    /// (doc, position) of every held-out word in either split.
    pub fn excluded_positions(&self) -> BTreeSet<(usize, usize)> {
        self.validation
            .iter()
            .chain(&self.test)
            .map(|i| (i.doc, i.position))
            .collect()
    }
}

fn equations_in_scope(registry: &EquationRegistry, params: &HeldoutParams, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let Some(limit) = params.singleton_sample else {
        return (0..registry.len() as u32).collect();
    };
    let singletons: Vec<u32> = registry.records().iter().filter(|r| r.is_singleton()).map(|r| r.eq_id).collect();
    let mut chosen: BTreeSet<u32> = registry
        .records()
        .iter()
        .filter(|r| !r.is_singleton())
        .map(|r| r.eq_id)
        .collect();
    if limit >= singletons.len() {
        chosen.extend(singletons);
    } else {
        chosen.extend(sample(rng, singletons.len(), limit).into_iter().map(|i| singletons[i]));
    }
    chosen.into_iter().collect()
}

/// Draw validation and test items for every equation in scope.
///
/// Candidates are in-vocabulary words within `candidate_window / 2`
/// positions of an occurrence of the equation whose own context window holds
/// at least one other word. An equation needs `2 * per_equation` distinct
/// candidates, otherwise it is skipped. A position is held out at most once.
pub fn build_heldout(
    streams: &[TokenStream],
    registry: &EquationRegistry,
    vocab: &Vocabulary,
    params: &HeldoutParams,
) -> HeldOut {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let scope = equations_in_scope(registry, params, &mut rng);
    let sampler = NegativeSampler::new(vocab.freqs(), params.negatives);

    let mut occurrences: Vec<Vec<(usize, usize)>> = vec![Vec::new(); registry.len()];
    for (d, stream) in streams.iter().enumerate() {
        for (p, item) in stream.items.iter().enumerate() {
            if let Item::Equation(e) = item {
                if let Some(list) = occurrences.get_mut(*e as usize) {
                    list.push((d, p));
                }
            }
        }
    }

    let ctx_half = params.context_window / 2;
    let cand_half = params.candidate_window / 2;
    let needed = 2 * params.per_equation;
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut out = HeldOut::default();

    for eq in scope {
        let mut candidates: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(d, p) in &occurrences[eq as usize] {
            let stream = &streams[d];
            for (q, item) in stream.window(p, cand_half) {
                let Item::Word(target) = item else { continue };
                if used.contains(&(d, q)) {
                    continue;
                }
                if stream.words_around(q, ctx_half).any(|w| w != target) {
                    candidates.insert((d, q));
                }
            }
        }
        if needed == 0 {
            continue;
        }
        if candidates.len() < needed {
            out.skipped += 1;
            continue;
        }
        let candidates: Vec<(usize, usize)> = candidates.into_iter().collect();
        let picks = sample(&mut rng, candidates.len(), needed).into_vec();
        for (k, pick) in picks.into_iter().enumerate() {
            let (d, q) = candidates[pick];
            used.insert((d, q));
            let Item::Word(target) = streams[d].items[q] else { unreachable!() };
            let mut context: Vec<Item> = streams[d]
                .words_around(q, ctx_half)
                .filter(|&w| w != target)
                .map(Item::Word)
                .collect();
            context.push(Item::Equation(eq));
            let negatives = sampler.sample_excluding(&mut rng, target, params.n_negatives);
            let split = if k < params.per_equation { Split::Validation } else { Split::Test };
            let item = HeldOutItem {
                eq_id: eq,
                doc: d,
                position: q,
                target,
                context,
                negatives,
                split,
            };
            match split {
                Split::Validation => out.validation.push(item),
                Split::Test => out.test.push(item),
            }
        }
    }
    if out.skipped > 0 {
        warn!("{} equations skipped: too few surrounding words for held-out items", out.skipped);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::VocabKind;

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_counts(VocabKind::Word, (0..n).map(|i| (format!("w{i:03}"), 100 + (n - i) as u64)))
    }

    fn registry(n: usize) -> EquationRegistry {
        let mut reg = EquationRegistry::new();
        for i in 0..n {
            reg.register("d", &format!("x_{i}"));
        }
        reg
    }

    /// Documents of the form w w w w E w w w w.
    fn streams(n_eq: usize) -> Vec<TokenStream> {
        (0..n_eq)
            .map(|e| {
                let mut items: Vec<Item> = (0..4).map(|k| Item::Word((e * 8 + k) as u32 % 40)).collect();
                items.push(Item::Equation(e as u32));
                items.extend((4..8).map(|k| Item::Word((e * 8 + k) as u32 % 40)));
                TokenStream {
                    doc_id: format!("d{e}"),
                    items,
                }
            })
            .collect()
    }

    #[test]
    fn context_is_window_words_plus_equation() {
        let s = vec![TokenStream {
            doc_id: "d".into(),
            items: vec![
                Item::Word(1),
                Item::Word(2),
                Item::Word(3),
                Item::Equation(0),
                Item::Word(4),
                Item::Word(5),
            ],
        }];
        let params = HeldoutParams {
            per_equation: 1,
            ..HeldoutParams::default()
        };
        let h = build_heldout(&s, &registry(1), &vocab(10), &params);
        for item in h.validation.iter().chain(&h.test) {
            assert_eq!(*item.context.last().unwrap(), Item::Equation(0));
            assert!(!item.context_words().any(|w| w == item.target));
            assert!(!item.negatives.contains(&item.target));
            assert_eq!(item.negatives.len(), 10);
        }
        // a word next to the equation: the equation fills one of the four window slots
        let params = HeldoutParams {
            per_equation: 2,
            ..HeldoutParams::default()
        };
        let h = build_heldout(&s, &registry(1), &vocab(10), &params);
        let item = h.validation.iter().chain(&h.test).find(|i| i.target == 3).unwrap();
        assert_eq!(item.context, [Item::Word(1), Item::Word(2), Item::Word(4), Item::Equation(0)]);
    }

    #[test]
    fn two_per_equation_per_split() {
        let h = build_heldout(&streams(50), &registry(50), &vocab(40), &HeldoutParams::default());
        assert_eq!(h.validation.len(), 100);
        assert_eq!(h.test.len(), 100);
        assert_eq!(h.skipped, 0);
        assert_eq!(h.excluded_positions().len(), 200);
    }

    #[test]
    fn sparse_equation_is_skipped() {
        let s = vec![TokenStream {
            doc_id: "d".into(),
            items: vec![Item::Word(1), Item::Equation(0), Item::Gap],
        }];
        let h = build_heldout(&s, &registry(1), &vocab(10), &HeldoutParams::default());
        assert_eq!(h.skipped, 1);
        assert!(h.validation.is_empty());
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = build_heldout(&streams(20), &registry(20), &vocab(40), &HeldoutParams::default());
        let b = build_heldout(&streams(20), &registry(20), &vocab(40), &HeldoutParams::default());
        assert_eq!(a, b);
        let c = build_heldout(
            &streams(20),
            &registry(20),
            &vocab(40),
            &HeldoutParams {
                seed: 99,
                ..HeldoutParams::default()
            },
        );
        assert_ne!(a, c);
    }

    #[test]
    fn singleton_sampling_keeps_repeated_equations() {
        let mut reg = registry(10);
        reg.register("d", "x_0");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = HeldoutParams {
            singleton_sample: Some(4),
            ..HeldoutParams::default()
        };
        let scope = equations_in_scope(&reg, &params, &mut rng);
        assert_eq!(scope.len(), 5);
        assert!(scope.contains(&0));
    }

    #[test]
    fn sampler_never_returns_excluded() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let only = NegativeSampler::uniform_over(4, &[2]);
        assert!(!only.can_sample_excluding(2));
        assert_eq!(only.sample_excluding(&mut rng, 2, 3), Vec::<u32>::new());
        assert_eq!(only.sample_excluding(&mut rng, 0, 3), vec![2, 2, 2]);
        let s = NegativeSampler::new(&[1, 1000, 1], NegativeDistribution::Unigram);
        let draws = s.sample_excluding(&mut rng, 1, 200);
        assert_eq!(draws.len(), 200);
        assert!(draws.iter().all(|&d| d != 1));
        assert!(NegativeSampler::uniform(1).sample_excluding(&mut rng, 0, 5).is_empty());
    }
}
