use std::collections::HashMap;
use std::fmt;

use crate::corpus::{VocabKind, Vocabulary};
use crate::error::{Error, Result};

use super::{parse_math_with, MathNode, ParseOptions};

/// Unit id standing for a unit dropped by the vocabulary threshold.
pub const UNIT_GAP: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Next,
    Above,
    Under,
    Over,
    Within,
}

impl Relation {
    pub fn code(self) -> char {
        match self {
            Relation::Next => 'n',
            Relation::Above => 'a',
            Relation::Under => 'u',
            Relation::Over => 'o',
            Relation::Within => 'w',
        }
    }

    pub fn from_code(code: char) -> Option<Self> {
        Some(match code {
            'n' => Relation::Next,
            'a' => Relation::Above,
            'u' => Relation::Under,
            'o' => Relation::Over,
            'w' => Relation::Within,
            _ => return None,
        })
    }
}

/// Structural slots in emission order; `next` is always handled last.
const NESTED_SLOTS: [Relation; 4] = [Relation::Above, Relation::Over, Relation::Under, Relation::Within];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SltTuple {
    pub from: String,
    pub to: String,
    pub relation: Relation,
}

impl SltTuple {
    pub fn new(from: impl Into<String>, to: impl Into<String>, relation: Relation) -> Self {
        SltTuple {
            from: from.into(),
            to: to.into(),
            relation,
        }
    }

    /// Canonical unit string `(from,to,rel)`.
    pub fn unit_string(&self) -> String {
        self.to_string()
    }

    /// Inverse of [`SltTuple::unit_string`]. Symbols never contain a comma
    /// unless they are the comma itself.
    pub fn parse_unit(s: &str) -> Option<Self> {
        let inner = s.strip_prefix('(')?.strip_suffix(')')?;
        let relation = Relation::from_code(inner.chars().last()?)?;
        let pair = inner[..inner.len() - 1].strip_suffix(',')?;
        let (from, to) = if let Some(rest) = pair.strip_prefix(",,") {
            (",", rest)
        } else {
            pair.split_once(',')?
        };
        if from.is_empty() || to.is_empty() {
            return None;
        }
        Some(SltTuple::new(from, to, relation))
    }
}

impl fmt::Display for SltTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.from, self.to, self.relation.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SltTupleSequence {
    pub eq_id: u32,
    pub tuples: Vec<SltTuple>,
}

impl SltTupleSequence {
    pub fn unit_strings(&self) -> impl Iterator<Item = String> + '_ {
        self.tuples.iter().map(SltTuple::unit_string)
    }
}

/// Depth-first tuple emission. At every node the structural slots come
/// first (above, over, under, within), each followed by its subtree, and the
/// `next` link last. Each slot links its owner to the first `symbol_window`
/// symbols of the slot's chain.
pub fn slt_tuples(tree: &MathNode, symbol_window: usize) -> Vec<SltTuple> {
    let mut out = Vec::new();
    emit_chain(tree, symbol_window.max(1), &mut out);
    out
}

fn emit_chain(head: &MathNode, window: usize, out: &mut Vec<SltTuple>) {
    for node in head.chain() {
        for relation in NESTED_SLOTS {
            if let Some(child) = node.slot(relation) {
                link(node, child, relation, window, out);
                emit_chain(child, window, out);
            }
        }
        if let Some(next) = node.next.as_deref() {
            link(node, next, Relation::Next, window, out);
        }
    }
}

fn link(from: &MathNode, head: &MathNode, relation: Relation, window: usize, out: &mut Vec<SltTuple>) {
    for to in head.chain().take(window) {
        out.push(SltTuple::new(from.symbol.clone(), to.symbol.clone(), relation));
    }
}

/// Parse and emit tuples for one equation.
pub fn tokenize_equation(eq_id: u32, latex: &str, symbol_window: usize, options: ParseOptions) -> Result<SltTupleSequence> {
    let tree = parse_math_with(latex, options)?;
    Ok(SltTupleSequence {
        eq_id,
        tuples: slt_tuples(&tree, symbol_window),
    })
}

/// Unit vocabulary plus every equation's unit id list. Units below the
/// threshold appear as [`UNIT_GAP`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquationUnits {
    pub vocabulary: Vocabulary,
    /// Indexed by equation id.
    pub sequences: Vec<Vec<u32>>,
}

impl EquationUnits {
    /// Unit ids of an equation without gaps.
    pub fn units(&self, eq_id: u32) -> impl Iterator<Item = u32> + '_ {
        self.sequences
            .get(eq_id as usize)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&u| u != UNIT_GAP)
    }
}

/// Count units over all sequences and keep those seen at least `min_count`
/// times. `equation_count` sizes the output so that equations without a
/// sequence get an empty list.
pub fn build_unit_vocabulary(sequences: &[SltTupleSequence], equation_count: usize, min_count: u64) -> Result<EquationUnits> {
    if sequences.is_empty() {
        return Err(Error::EmptyEquationSet);
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for seq in sequences {
        for unit in seq.unit_strings() {
            *counts.entry(unit).or_default() += 1;
        }
    }
    let vocabulary = Vocabulary::from_counts(VocabKind::Unit, counts.into_iter().filter(|(_, c)| *c >= min_count));
    let mut out = vec![Vec::new(); equation_count];
    for seq in sequences {
        let ids = seq.unit_strings().map(|u| vocabulary.id(&u).unwrap_or(UNIT_GAP)).collect();
        if let Some(slot) = out.get_mut(seq.eq_id as usize) {
            *slot = ids;
        }
    }
    Ok(EquationUnits {
        vocabulary,
        sequences: out,
    })
}
