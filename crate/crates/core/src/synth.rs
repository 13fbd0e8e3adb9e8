//! Planted-signal corpus generator.
//!
//! Documents belong to one of several classes. Each class owns a disjoint
//! set of topic words and a pool of math symbols; its display equations are
//! random expressions over that pool, so they are mostly singletons that
//! still share equation units within the class. Topic words cluster around
//! the equations. High-frequency filler words end up in the frequency stop
//! list and stopword glue is removed, leaving gaps between content words.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{normalize_latex, RawDocument};
use crate::bundle::Bundle;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::retrieval::{nearest_equations, nearest_words, Metric};

const TOPICS: [[&str; 20]; 4] = [
    [
        "gradient", "descent", "convergence", "optimizer", "momentum", "iterate", "stepsize", "convex",
        "minimizer", "objective", "curvature", "hessian", "lipschitz", "smoothness", "stationary", "saddle",
        "backtracking", "linesearch", "subgradient", "proximal",
    ],
    [
        "probability", "likelihood", "posterior", "prior", "bayesian", "sampling", "marginal", "inference",
        "variance", "estimator", "gaussian", "dirichlet", "conjugate", "evidence", "latent", "mixture",
        "entropy", "expectation", "density", "stochastic",
    ],
    [
        "retrieval", "ranking", "query", "relevance", "document", "index", "precision", "recall", "corpus",
        "search", "similarity", "cosine", "distance", "engine", "lexical", "matching", "reranking", "clicks",
        "snippet", "collection",
    ],
    [
        "network", "neuron", "activation", "layer", "convolution", "recurrent", "attention", "encoder",
        "decoder", "dropout", "backpropagation", "embedding", "softmax", "perceptron", "pooling", "kernel",
        "residual", "transformer", "hidden", "weights",
    ],
];

const GENERAL: [&str; 80] = [
    "analysis", "approach", "framework", "performance", "experiment", "evaluation", "dataset", "baseline",
    "parameter", "function", "variable", "algorithm", "structure", "feature", "representation", "learning",
    "training", "testing", "accuracy", "error", "measure", "metric", "quality", "setting", "scenario",
    "domain", "application", "component", "module", "process", "system", "technique", "strategy",
    "formulation", "solution", "property", "theorem", "lemma", "proof", "definition", "assumption",
    "condition", "constraint", "bound", "limit", "behavior", "pattern", "signal", "input", "output",
    "instance", "sample", "element", "vector", "matrix", "space", "dimension", "scale", "size", "range",
    "level", "stage", "phase", "iteration", "update", "rule", "step", "quantity", "amount", "ratio",
    "factor", "term", "notation", "figure", "table", "appendix", "literature", "study", "prior-work",
    "future",
];

const FILLER: [&str; 25] = [
    "result", "method", "model", "paper", "section", "show", "propose", "present", "given", "shown",
    "following", "different", "number", "case", "problem", "value", "example", "order", "general",
    "proposed", "results", "first", "second", "based", "work",
];

const GLUE: [&str; 16] = [
    "the", "of", "and", "a", "is", "we", "in", "to", "for", "with", "this", "that", "on", "by", "as", "are",
];

const SYMBOLS: [[&str; 6]; 4] = [
    ["\\alpha", "\\beta", "\\nabla", "x", "\\eta", "g"],
    ["\\theta", "\\lambda", "\\mu", "\\sigma", "p", "z"],
    ["\\phi", "\\psi", "\\omega", "q", "d", "s"],
    ["\\xi", "\\kappa", "\\tau", "W", "h", "b"],
];

const OPERATORS: [&str; 4] = ["\\partial", "\\log", "\\cos", "\\tanh"];

/// Shape of the generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedParams {
    pub classes: usize,
    pub docs_per_class: usize,
    /// Content sentences per document outside the equation paragraphs.
    pub background_sentences: usize,
    pub min_equations: usize,
    pub max_equations: usize,
    /// Length range of the topic-heavy sentences on either side of an
    /// equation.
    pub near_sentence_len: (usize, usize),
    pub seed: u64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams {
            classes: 4,
            docs_per_class: 50,
            background_sentences: 8,
            min_equations: 3,
            max_equations: 4,
            near_sentence_len: (8, 12),
            seed: 7,
        }
    }
}

/// Generated documents with their ground truth.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub documents: Vec<RawDocument>,
    /// Class of each document, parallel to `documents`.
    pub doc_class: Vec<usize>,
    /// Topic words of each class.
    pub topic_words: Vec<Vec<String>>,
    /// Class of every generated equation, keyed by normalized LaTeX.
    pub equation_class: HashMap<String, usize>,
}

impl PlantedCorpus {
    pub fn class_of_equation(&self, latex: &str) -> Option<usize> {
        self.equation_class.get(latex).copied()
    }

    /// Class whose topic set contains `word`.
    pub fn class_of_word(&self, word: &str) -> Option<usize> {
        self.topic_words.iter().position(|set| set.iter().any(|w| w == word))
    }

    /// Share of the top-`k` Euclidean eq2eq neighbours, over every equation
    /// of the bundle, that belong to the query's class.
    pub fn eq2eq_purity(&self, model: &Model, bundle: &Bundle, k: usize) -> Result<f64> {
        let class = |id: u32| bundle.registry.get(id).and_then(|r| self.class_of_equation(&r.latex));
        let (mut hits, mut total) = (0usize, 0usize);
        for e in 0..bundle.registry.len() as u32 {
            let c = class(e);
            for h in nearest_equations(model, e, k, Metric::Euclidean)?.hits {
                total += 1;
                hits += usize::from(c.is_some() && class(h.id) == c);
            }
        }
        Ok(hits as f64 / total.max(1) as f64)
    }

    /// Share of the top-`k` cosine eq2word neighbours that are topic words
    /// of the query equation's class.
    pub fn eq2word_precision(&self, model: &Model, bundle: &Bundle, k: usize) -> Result<f64> {
        let (mut hits, mut total) = (0usize, 0usize);
        for e in 0..bundle.registry.len() as u32 {
            let c = bundle.registry.get(e).and_then(|r| self.class_of_equation(&r.latex));
            for h in nearest_words(model, e, k, Metric::Cosine)?.hits {
                total += 1;
                let w = bundle.vocabulary.form(h.id).and_then(|w| self.class_of_word(w));
                hits += usize::from(c.is_some() && w == c);
            }
        }
        Ok(hits as f64 / total.max(1) as f64)
    }

    /// Write every document as `<doc_id>.tex` into `dir`, creating it.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for doc in &self.documents {
            let path = dir.join(format!("{}.tex", doc.doc_id));
            fs::write(&path, &doc.source_text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn pick<'a, R: Rng>(rng: &mut R, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).copied().unwrap_or_default()
}

fn equation<R: Rng>(rng: &mut R, class: usize) -> String {
    let pool = &SYMBOLS[class];
    let op = OPERATORS[class];
    let mut s = || pick(rng, pool).to_string();
    let (a, b, c, d, e) = (s(), s(), s(), s(), s());
    let template = rng.random_range(0..6);
    let main = match template {
        0 => format!("{a} = {b}^{{2}} + {c}_{{{d}}}"),
        1 => format!("{a}_{{{b}}} = \\frac{{{c}}}{{{d} + {e}}}"),
        2 => format!("{a} = \\sum_{{{b}=1}}^{{{c}}} {d}_{{{b}}} {e}"),
        3 => format!("{a}({b}) = \\sqrt{{{c}^{{2}} + {d}}}"),
        4 => format!("{op} {a} \\leq {b} {c}^{{{d}}}"),
        _ => format!("{a} = {op}({b} {c}) - {d}"),
    };
    let tail = match rng.random_range(0..3) {
        0 => String::new(),
        1 => format!(" + {op} {e}"),
        _ => format!(" - \\frac{{{a}}}{{{e}}}"),
    };
    format!("{main}{tail}")
}

struct Mix {
    glue: f64,
    filler: f64,
    general: f64,
}

const BACKGROUND: Mix = Mix {
    glue: 0.20,
    filler: 0.45,
    general: 0.20,
};

const NEAR_EQUATION: Mix = Mix {
    glue: 0.10,
    filler: 0.0,
    general: 0.0,
};

fn sentence<R: Rng>(rng: &mut R, class: usize, mix: &Mix, len: (usize, usize)) -> String {
    let len = rng.random_range(len.0..=len.1);
    let words: Vec<&str> = (0..len)
        .map(|_| {
            let u: f64 = rng.random();
            if u < mix.glue {
                pick(rng, &GLUE)
            } else if u < mix.glue + mix.filler {
                pick(rng, &FILLER)
            } else if u < mix.glue + mix.filler + mix.general {
                pick(rng, &GENERAL)
            } else {
                pick(rng, &TOPICS[class])
            }
        })
        .collect();
    let mut text = words.join(" ");
    if let Some(first) = text.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    text.push_str(". ");
    text
}

/// Generate the corpus. Documents are named `c{class}_d{index}`.
pub fn planted_corpus(params: &PlantedParams) -> PlantedCorpus {
    assert!(params.classes <= TOPICS.len(), "at most {} classes", TOPICS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut documents = Vec::new();
    let mut doc_class = Vec::new();
    let mut equation_class = HashMap::new();
    for i in 0..params.docs_per_class {
        for class in 0..params.classes {
            let mut body = String::from("\\documentclass{article}\n\\begin{document}\n");
            let n_eq = rng.random_range(params.min_equations..=params.max_equations);
            let mut background = params.background_sentences;
            for _ in 0..n_eq {
                let lead = background.min(rng.random_range(1..3));
                background -= lead;
                for _ in 0..lead {
                    body.push_str(&sentence(&mut rng, class, &BACKGROUND, (8, 13)));
                }
                body.push_str("\n\n");
                body.push_str(&sentence(&mut rng, class, &NEAR_EQUATION, params.near_sentence_len));
                let latex = equation(&mut rng, class);
                equation_class.insert(normalize_latex(&latex), class);
                body.push_str(&format!("\n\\begin{{equation}}\n{latex}\n\\end{{equation}}\n"));
                body.push_str(&sentence(&mut rng, class, &NEAR_EQUATION, params.near_sentence_len));
                body.push_str("\n\n");
            }
            for _ in 0..background {
                body.push_str(&sentence(&mut rng, class, &BACKGROUND, (8, 13)));
            }
            body.push_str("\n\\end{document}\n");
            let doc = RawDocument::new(format!("c{class}_d{i:03}"), body).expect("non-empty document");
            documents.push(doc);
            doc_class.push(class);
        }
    }
    PlantedCorpus {
        documents,
        doc_class,
        topic_words: TOPICS[..params.classes]
            .iter()
            .map(|set| set.iter().map(|w| w.to_string()).collect())
            .collect(),
        equation_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Stopwords;
    use crate::slt::{tokenize_equation, ParseOptions};
    use std::collections::HashSet;

    #[test]
    fn word_lists_are_disjoint_and_not_stopwords() {
        let stop = Stopwords::english();
        let mut seen = HashSet::new();
        for w in TOPICS.iter().flatten().chain(&GENERAL).chain(&FILLER) {
            assert!(seen.insert(*w), "duplicate {w}");
            assert!(!stop.contains(w), "{w} is a stopword");
            assert!(w.len() >= 4, "{w} too short");
        }
        assert!(GLUE.iter().all(|w| stop.contains(w)));
    }

    #[test]
    fn equations_parse_strictly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for class in 0..4 {
            for _ in 0..50 {
                let latex = equation(&mut rng, class);
                let seq = tokenize_equation(0, &latex, 1, ParseOptions { lenient: false }).unwrap();
                assert!(seq.tuples.len() >= 3, "{latex}");
            }
        }
    }

    #[test]
    fn deterministic_and_labelled() {
        let params = PlantedParams {
            docs_per_class: 3,
            ..PlantedParams::default()
        };
        let a = planted_corpus(&params);
        let b = planted_corpus(&params);
        assert_eq!(a.documents, b.documents);
        assert_eq!(a.documents.len(), 12);
        assert_eq!(a.class_of_word("gradient"), Some(0));
        assert_eq!(a.class_of_word("analysis"), None);
        assert!(a.equation_class.len() >= 30);
    }
}
