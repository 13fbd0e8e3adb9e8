//! Symbol layout trees for display equations and the equation-unit
//! tuples derived from them.
//!
//! A layout tree places each symbol relative to its neighbours through five
//! spatial slots: `n` (next, to the right), `a` (above), `u` (under),
//! `o` (over, e.g. a numerator) and `w` (within, e.g. a radicand). An
//! equation unit is a tuple `(from, to, relation)` linking two symbols.

mod commands;
mod lex;
mod parse;
mod tuples;

pub use parse::{parse_math, parse_math_with, ParseOptions};
pub use tuples::{
    build_unit_vocabulary, slt_tuples, tokenize_equation, EquationUnits, Relation, SltTuple, SltTupleSequence,
    UNIT_GAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Symbol,
    /// Accent-like wrapper whose argument sits in `within`.
    Group,
    Fraction,
    /// Stand-in base for scripts that have none (`{}^{2}`).
    ScriptCarrier,
    Root,
    OperatorName,
}

/// One node of a layout tree. Every slot holds the head of a horizontal
/// chain linked through `next`.
#[derive(Debug, Clone, PartialEq)]
pub struct MathNode {
    pub kind: NodeKind,
    pub symbol: String,
    pub next: Option<Box<MathNode>>,
    pub above: Option<Box<MathNode>>,
    pub under: Option<Box<MathNode>>,
    pub over: Option<Box<MathNode>>,
    pub within: Option<Box<MathNode>>,
}

impl MathNode {
    pub fn leaf(kind: NodeKind, symbol: impl Into<String>) -> Self {
        MathNode {
            kind,
            symbol: symbol.into(),
            next: None,
            above: None,
            under: None,
            over: None,
            within: None,
        }
    }

    pub fn slot(&self, relation: Relation) -> Option<&MathNode> {
        match relation {
            Relation::Next => self.next.as_deref(),
            Relation::Above => self.above.as_deref(),
            Relation::Under => self.under.as_deref(),
            Relation::Over => self.over.as_deref(),
            Relation::Within => self.within.as_deref(),
        }
    }

    /// This node followed by its `next` chain.
    pub fn chain(&self) -> impl Iterator<Item = &MathNode> {
        std::iter::successors(Some(self), |n| n.next.as_deref())
    }

    /// Number of nodes in the whole tree.
    pub fn node_count(&self) -> usize {
        self.chain()
            .map(|n| {
                1 + [Relation::Above, Relation::Under, Relation::Over, Relation::Within]
                    .into_iter()
                    .filter_map(|r| n.slot(r))
                    .map(MathNode::node_count)
                    .sum::<usize>()
            })
            .sum()
    }
}
