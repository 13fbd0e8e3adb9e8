use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numeric::{dot, exact_mean};

use super::{ContextMode, EmbeddingTable, ItemRef, Param, Slot, Tables, UnitContext};

/// Floor inside the logarithms of the loss.
pub const LOG_EPSILON: f64 = 1e-12;

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Feature-vector rows making up a context, with their weights.
///
/// Word and unit items stand for themselves. An equation item expands
/// according to the table view: nothing (words-only pass), its own `alpha`,
/// or the `alpha` rows of its units (summed or averaged).
pub(crate) fn expand_context(context: &[ItemRef], tables: &Tables<'_>) -> Result<Vec<(ItemRef, f64)>> {
    let mut rows = Vec::with_capacity(context.len());
    for &item in context {
        match item {
            ItemRef::Word(_) | ItemRef::Unit(_) => rows.push((item, 1.0)),
            ItemRef::Equation(e) => match tables.context {
                ContextMode::WordsOnly => {}
                ContextMode::EquationVectors => rows.push((item, 1.0)),
                ContextMode::EquationUnits => {
                    let units: Vec<u32> = tables.units_of(e)?.collect();
                    let weight = match tables.unit_context {
                        UnitContext::Sum => 1.0,
                        UnitContext::Mean => 1.0 / units.len().max(1) as f64,
                    };
                    rows.extend(units.into_iter().map(|u| (ItemRef::Unit(u), weight)));
                }
            },
        }
    }
    Ok(rows)
}

fn weighted_sum(rows: &[(ItemRef, f64)], tables: &Tables<'_>) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; tables.words.dim()];
    for &(item, weight) in rows {
        let v = tables.vector(Slot {
            item,
            param: Param::Alpha,
        })?;
        for (s, x) in sum.iter_mut().zip(v) {
            *s += weight * x;
        }
    }
    Ok(sum)
}

/// Context sum, or an error when the context expands to nothing.
pub fn nonempty_context_sum(context: &[ItemRef], tables: &Tables<'_>) -> Result<Vec<f64>> {
    let rows = expand_context(context, tables)?;
    if rows.is_empty() {
        return Err(Error::InvalidContext("empty context".into()));
    }
    weighted_sum(&rows, tables)
}

/// Sum of the feature vectors of a context.
pub fn word_context_sum(context: &[ItemRef], tables: &Tables<'_>) -> Result<Vec<f64>> {
    weighted_sum(&expand_context(context, tables)?, tables)
}

fn param(target: ItemRef, context: &[ItemRef], tables: &Tables<'_>) -> Result<f64> {
    let ctx = word_context_sum(context, tables)?;
    let rho = tables.vector(Slot {
        item: target,
        param: Param::Rho,
    })?;
    Ok(sigmoid(dot(rho, &ctx)))
}

/// Probability that `word` is observed given its context (words and,
/// depending on the table view, in-window equations).
pub fn bernoulli_param_word(word: u32, context: &[ItemRef], tables: &Tables<'_>) -> Result<f64> {
    param(ItemRef::Word(word), context, tables)
}

/// Probability of an equation given the words around it.
pub fn bernoulli_param_equation(eq: u32, context_words: &[u32], tables: &Tables<'_>) -> Result<f64> {
    let context: Vec<ItemRef> = context_words.iter().map(|&w| ItemRef::Word(w)).collect();
    param(ItemRef::Equation(eq), &context, tables)
}

/// Probability of a unit given neighbouring units of the same equation.
pub fn bernoulli_param_unit(unit: u32, context_units: &[u32], tables: &Tables<'_>) -> Result<f64> {
    let context: Vec<ItemRef> = context_units.iter().map(|&u| ItemRef::Unit(u)).collect();
    param(ItemRef::Unit(unit), &context, tables)
}

/// Probability of a word whose context words are joined by every unit of
/// every in-window equation.
pub fn bernoulli_param_word_units(
    word: u32,
    context_words: &[u32],
    equations: &[u32],
    tables: &Tables<'_>,
) -> Result<f64> {
    let view = Tables {
        context: ContextMode::EquationUnits,
        ..*tables
    };
    let context: Vec<ItemRef> = context_words
        .iter()
        .map(|&w| ItemRef::Word(w))
        .chain(equations.iter().map(|&e| ItemRef::Equation(e)))
        .collect();
    param(ItemRef::Word(word), &context, &view)
}

/// One observed or sampled (target, context) cell of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub target: ItemRef,
    pub context: Vec<ItemRef>,
    /// 1 for an observed pair, 0 for a negative sample.
    pub label: u8,
}

/// Gradients keyed by parameter row.
pub type SparseGrads = BTreeMap<Slot, Vec<f64>>;

fn bernoulli_loss(b: f64, label: u8) -> f64 {
    if label == 1 {
        -b.max(LOG_EPSILON).ln()
    } else {
        -(1.0 - b).max(LOG_EPSILON).ln()
    }
}

fn add_scaled(grads: &mut SparseGrads, slot: Slot, scale: f64, v: &[f64]) {
    let g = grads.entry(slot).or_insert_with(|| vec![0.0; v.len()]);
    for (gi, vi) in g.iter_mut().zip(v) {
        *gi += scale * vi;
    }
}

/// Loss and gradients of a group of targets sharing one context: the
/// observed target plus its negative samples. The loss and gradients are
/// sums over the group.
pub fn group_loss_and_grads(
    targets: &[(ItemRef, u8)],
    context: &[ItemRef],
    tables: &Tables<'_>,
) -> Result<(f64, SparseGrads)> {
    let rows = expand_context(context, tables)?;
    if rows.is_empty() {
        return Err(Error::InvalidContext("empty context".into()));
    }
    let ctx = weighted_sum(&rows, tables)?;
    let mut grads = SparseGrads::new();
    let mut ctx_grad = vec![0.0; ctx.len()];
    let mut loss = 0.0;
    for &(target, label) in targets {
        if label > 1 {
            return Err(Error::InvalidContext(format!("label must be 0 or 1, got {label}")));
        }
        let slot = Slot {
            item: target,
            param: Param::Rho,
        };
        let rho = tables.vector(slot)?;
        let b = sigmoid(dot(rho, &ctx));
        loss += bernoulli_loss(b, label);
        let residual = b - f64::from(label);
        add_scaled(&mut grads, slot, residual, &ctx);
        for (g, r) in ctx_grad.iter_mut().zip(rho) {
            *g += residual * r;
        }
    }
    for (item, weight) in rows {
        let slot = Slot {
            item,
            param: Param::Alpha,
        };
        add_scaled(&mut grads, slot, weight, &ctx_grad);
    }
    Ok((loss, grads))
}

/// Loss `-[y log b + (1-y) log(1-b)]` of a single pair and its gradients
/// with respect to the target's `rho` and the context items' `alpha`.
pub fn pair_loss_and_grads(pair: &TrainingPair, tables: &Tables<'_>) -> Result<(f64, SparseGrads)> {
    group_loss_and_grads(&[(pair.target, pair.label)], &pair.context, tables)
}

/// Equation `(alpha, rho)` as the componentwise means of its units' vectors.
pub fn equation_vector_from_units(units: &[u32], table: &EmbeddingTable) -> Result<(Vec<f64>, Vec<f64>)> {
    if units.is_empty() {
        return Err(Error::UntokenizableEquation);
    }
    let dim = table.dim();
    let mut alpha = Vec::with_capacity(dim);
    let mut rho = Vec::with_capacity(dim);
    let mut column = Vec::with_capacity(units.len());
    for k in 0..dim {
        column.clear();
        for &u in units {
            column.push(table.alpha(u)?[k]);
        }
        alpha.push(exact_mean(&column));
        column.clear();
        for &u in units {
            column.push(table.rho(u)?[k]);
        }
        rho.push(exact_mean(&column));
    }
    Ok((alpha, rho))
}
