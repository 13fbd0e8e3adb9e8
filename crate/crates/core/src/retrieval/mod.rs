//! Nearest-neighbour queries over a fitted model: equations to equations,
//! equations to words and bags of words to equations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{EmbeddingTable, Model, Param};
use crate::numeric::{dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Higher is better.
    Cosine,
    /// Lower is better.
    Euclidean,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cosine" => Some(Metric::Cosine),
            "euclidean" => Some(Metric::Euclidean),
            _ => None,
        }
    }

    pub fn score(self, query: &[f64], candidate: &[f64]) -> f64 {
        match self {
            Metric::Cosine => cosine(query, candidate),
            Metric::Euclidean => query
                .iter()
                .zip(candidate)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Sort key where smaller is better; NaN sorts last, -0 equals +0.
    fn key(self, score: f64) -> f64 {
        if score.is_nan() {
            return f64::INFINITY;
        }
        let key = match self {
            Metric::Cosine => -score,
            Metric::Euclidean => score,
        };
        key + 0.0
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Cosine similarity; `-inf` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return f64::NEG_INFINITY;
    }
    dot(a, b) / (na * nb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub id: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub query: String,
    pub metric: Metric,
    /// Best first; ties by ascending id.
    pub hits: Vec<Hit>,
}

struct Entry {
    key: f64,
    id: u32,
    score: f64,
}

impl Entry {
    fn order(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(self.id.cmp(&other.id))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.order(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order(other)
    }
}

/// Top `k` of `rows` rows of `matrix` (row-major, width `query.len()`)
/// against `query`, skipping `exclude`.
pub fn top_k(query: &[f64], matrix: &[f64], metric: Metric, k: usize, exclude: Option<u32>) -> Vec<Hit> {
    let dim = query.len();
    if k == 0 || dim == 0 {
        return Vec::new();
    }
    let mut heap: BinaryHeap<Entry> = BinaryHeap::with_capacity(k + 1);
    for (i, row) in matrix.chunks_exact(dim).enumerate() {
        let id = i as u32;
        if Some(id) == exclude {
            continue;
        }
        let score = metric.score(query, row);
        let entry = Entry {
            key: metric.key(score),
            id,
            score,
        };
        if heap.len() < k {
            heap.push(entry);
        } else if heap.peek().is_some_and(|worst| entry < *worst) {
            heap.pop();
            heap.push(entry);
        }
    }
    heap.into_sorted_vec()
        .into_iter()
        .map(|e| Hit {
            id: e.id,
            score: e.score,
        })
        .collect()
}

fn check_equation(model: &Model, eq_id: u32) -> Result<()> {
    if eq_id as usize >= model.equations.rows() {
        return Err(Error::UnknownEquation(eq_id));
    }
    Ok(())
}

/// Equations closest to `eq_id` by their feature vectors (Euclidean by
/// default).
pub fn nearest_equations(model: &Model, eq_id: u32, k: usize, metric: Metric) -> Result<Ranking> {
    check_equation(model, eq_id)?;
    let query = model.equations.alpha(eq_id)?;
    Ok(Ranking {
        query: format!("eq2eq:{eq_id}"),
        metric,
        hits: top_k(query, model.equations.alpha_matrix(), metric, k, Some(eq_id)),
    })
}

/// Words whose feature vectors best match the equation's interaction vector
/// (cosine by default).
pub fn nearest_words(model: &Model, eq_id: u32, k: usize, metric: Metric) -> Result<Ranking> {
    check_equation(model, eq_id)?;
    let query = model.equations.rho(eq_id)?;
    Ok(Ranking {
        query: format!("eq2word:{eq_id}"),
        metric,
        hits: top_k(query, model.words.alpha_matrix(), metric, k, None),
    })
}

/// Mean of the interaction vectors of `words`.
pub fn word_query_vector(words: &EmbeddingTable, ids: &[u32]) -> Result<Vec<f64>> {
    if ids.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut q = vec![0.0; words.dim()];
    for &id in ids {
        for (s, x) in q.iter_mut().zip(words.rho(id)?) {
            *s += x;
        }
    }
    let n = ids.len() as f64;
    q.iter_mut().for_each(|x| *x /= n);
    Ok(q)
}

/// Equations best matching the mean interaction vector of a bag of words.
/// `param` selects which equation vector is compared (interaction vectors
/// by default).
pub fn equations_for_words(model: &Model, word_ids: &[u32], k: usize, param: Param, metric: Metric) -> Result<Ranking> {
    let query = word_query_vector(&model.words, word_ids)?;
    let matrix = match param {
        Param::Rho => model.equations.rho_matrix(),
        Param::Alpha => model.equations.alpha_matrix(),
    };
    let ids: Vec<String> = word_ids.iter().map(u32::to_string).collect();
    Ok(Ranking {
        query: format!("word2eq:{}", ids.join(",")),
        metric,
        hits: top_k(&query, matrix, metric, k, None),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine(&[1.0, 0.0], &[2.0, 0.0]), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 3.0]), 0.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn signed_zero_scores_tie() {
        let matrix = [-0.0, -1.0, 0.0, 1.0];
        let hits = top_k(&[1.0, 0.0], &matrix, Metric::Cosine, 2, None);
        assert_eq!(hits[0].score, 0.0);
        assert_eq!(hits.iter().map(|h| h.id).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn ties_and_exclusion() {
        let matrix = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let hits = top_k(&[1.0, 0.0], &matrix, Metric::Cosine, 10, Some(1));
        let ids: Vec<u32> = hits.iter().map(|h| h.id).collect();
        assert_eq!(ids, vec![0, 4, 2, 3]);
        assert_eq!(hits[3].score, f64::NEG_INFINITY);
        let hits = top_k(&[1.0, 0.0], &matrix, Metric::Euclidean, 2, None);
        assert_eq!(hits.iter().map(|h| h.id).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(hits[0].score, 0.0);
    }
}
