//! LaTeX math to layout tree.

use crate::error::{Error, Result};

use super::commands::{self, contains};
use super::lex::{lex, Token, TokenKind};
use super::{MathNode, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    /// Unknown commands become opaque symbols instead of errors.
    pub lenient: bool,
}

/// Parse in strict mode: unknown commands are errors.
pub fn parse_math(latex: &str) -> Result<MathNode> {
    parse_math_with(latex, ParseOptions::default())
}

pub fn parse_math_with(latex: &str, options: ParseOptions) -> Result<MathNode> {
    let tokens = lex(latex)?;
    let mut parser = Parser {
        latex,
        tokens,
        pos: 0,
        options,
    };
    let seq = parser.sequence(None)?;
    chain(seq).map(|node| *node).ok_or_else(|| Error::MathParse {
        offset: 0,
        message: "empty expression".into(),
    })
}

/// Parse-time node: slots are plain sequences, linked into `next` chains
/// once parsing is done.
#[derive(Debug, Clone)]
struct Node {
    kind: NodeKind,
    symbol: String,
    above: Vec<Node>,
    under: Vec<Node>,
    over: Vec<Node>,
    within: Vec<Node>,
}

impl Node {
    fn new(kind: NodeKind, symbol: impl Into<String>) -> Self {
        Node {
            kind,
            symbol: symbol.into(),
            above: Vec::new(),
            under: Vec::new(),
            over: Vec::new(),
            within: Vec::new(),
        }
    }

    fn symbol(symbol: impl Into<String>) -> Self {
        Self::new(NodeKind::Symbol, symbol)
    }
}

fn chain(seq: Vec<Node>) -> Option<Box<MathNode>> {
    let mut next: Option<Box<MathNode>> = None;
    for node in seq.into_iter().rev() {
        next = Some(Box::new(MathNode {
            kind: node.kind,
            symbol: node.symbol,
            next,
            above: chain(node.above),
            under: chain(node.under),
            over: chain(node.over),
            within: chain(node.within),
        }));
    }
    next
}

struct Parser<'a> {
    latex: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    options: ParseOptions,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.latex.len(), |t| t.offset)
    }

    fn error<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::MathParse {
            offset,
            message: message.into(),
        })
    }

    /// Parse nodes until end of input, or until the `}` matching a `{` at
    /// `open` (consumed) when `open` is given.
    fn sequence(&mut self, open: Option<usize>) -> Result<Vec<Node>> {
        let mut seq: Vec<Node> = Vec::new();
        loop {
            let offset = self.offset();
            let Some(kind) = self.peek().cloned() else {
                if let Some(open) = open {
                    return self.error(open, "unbalanced brace: missing }");
                }
                return Ok(seq);
            };
            match kind {
                TokenKind::Close => {
                    if open.is_none() {
                        return self.error(offset, "unbalanced brace: unexpected }");
                    }
                    self.pos += 1;
                    return Ok(seq);
                }
                TokenKind::Superscript | TokenKind::Subscript => {
                    self.pos += 1;
                    let arg = self.argument()?;
                    if seq.is_empty() {
                        seq.push(Node::new(NodeKind::ScriptCarrier, "{}"));
                    }
                    let base = seq.last_mut().expect("non-empty");
                    let above = kind == TokenKind::Superscript;
                    let slot = if above { &mut base.above } else { &mut base.under };
                    let primes_only = !slot.is_empty() && slot.iter().all(|n| n.symbol == "\\prime");
                    if !slot.is_empty() && !(above && primes_only) {
                        return self.error(offset, if above { "double superscript" } else { "double subscript" });
                    }
                    slot.extend(arg);
                }
                TokenKind::Prime => {
                    self.pos += 1;
                    if seq.is_empty() {
                        seq.push(Node::new(NodeKind::ScriptCarrier, "{}"));
                    }
                    seq.last_mut().expect("non-empty").above.push(Node::symbol("\\prime"));
                }
                TokenKind::Align => self.pos += 1,
                TokenKind::Command(ref name)
                    if contains(commands::INFIX_FRACTIONS, name) || contains(commands::INFIX_BINOMIALS, name) =>
                {
                    self.pos += 1;
                    let symbol = if contains(commands::INFIX_BINOMIALS, name) { "binom" } else { "frac" };
                    let right = self.sequence(open)?;
                    let mut node = Node::new(NodeKind::Fraction, symbol);
                    node.over = seq;
                    node.under = right;
                    return Ok(vec![node]);
                }
                _ => {
                    let nodes = self.atom()?;
                    seq.extend(nodes);
                }
            }
        }
    }

    /// A script or command argument: a braced group or a single token.
    fn argument(&mut self) -> Result<Vec<Node>> {
        loop {
            let offset = self.offset();
            match self.peek().cloned() {
                None => return self.error(offset, "missing argument"),
                Some(TokenKind::Open) => {
                    self.pos += 1;
                    return self.sequence(Some(offset));
                }
                Some(TokenKind::Number(n)) if n.len() > 1 => {
                    // \frac12 and x^12 take a single digit
                    let mut chars = n.chars();
                    let first = chars.next().expect("non-empty number");
                    self.tokens[self.pos].kind = TokenKind::Number(chars.as_str().to_string());
                    self.tokens[self.pos].offset += first.len_utf8();
                    return Ok(vec![Node::symbol(first.to_string())]);
                }
                Some(TokenKind::Close | TokenKind::Superscript | TokenKind::Subscript | TokenKind::Align) => {
                    return self.error(offset, "missing argument");
                }
                Some(_) => {
                    let nodes = self.atom()?;
                    if !nodes.is_empty() {
                        return Ok(nodes);
                    }
                }
            }
        }
    }

    /// Source text of the next argument, without parsing it.
    fn raw_argument(&mut self) -> Result<String> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(TokenKind::Open) => {
                let mut depth = 0usize;
                let start = self.tokens[self.pos].offset + 1;
                while let Some(tok) = self.tokens.get(self.pos) {
                    match tok.kind {
                        TokenKind::Open => depth += 1,
                        TokenKind::Close => {
                            depth -= 1;
                            if depth == 0 {
                                let end = tok.offset;
                                self.pos += 1;
                                return Ok(self.latex[start..end].split_whitespace().collect::<Vec<_>>().join(" "));
                            }
                        }
                        _ => {}
                    }
                    self.pos += 1;
                }
                self.error(offset, "unbalanced brace: missing }")
            }
            Some(TokenKind::Number(n)) => {
                self.pos += 1;
                Ok(n)
            }
            Some(TokenKind::Char(c)) => {
                self.pos += 1;
                Ok(c.to_string())
            }
            Some(TokenKind::Command(name)) => {
                self.pos += 1;
                Ok(format!("\\{name}"))
            }
            _ => self.error(offset, "missing argument"),
        }
    }

    /// Optional `[...]` argument.
    fn optional_argument(&mut self) -> Result<Vec<Node>> {
        if self.peek() != Some(&TokenKind::Char('[')) {
            return Ok(Vec::new());
        }
        let open = self.offset();
        self.pos += 1;
        let mut seq = Vec::new();
        loop {
            match self.peek() {
                None => return self.error(open, "unbalanced bracket: missing ]"),
                Some(TokenKind::Char(']')) => {
                    self.pos += 1;
                    return Ok(seq);
                }
                Some(TokenKind::Superscript | TokenKind::Subscript) => {
                    // scripts inside a root index attach to its last symbol
                    let above = self.peek() == Some(&TokenKind::Superscript);
                    let offset = self.offset();
                    self.pos += 1;
                    let arg = self.argument()?;
                    let Some(base) = seq.last_mut() else {
                        return self.error(offset, "script without base");
                    };
                    let base: &mut Node = base;
                    if above { base.above.extend(arg) } else { base.under.extend(arg) }
                }
                Some(_) => {
                    let nodes = self.atom()?;
                    seq.extend(nodes);
                }
            }
        }
    }

    fn atom(&mut self) -> Result<Vec<Node>> {
        let offset = self.offset();
        let Some(kind) = self.peek().cloned() else {
            return Ok(Vec::new());
        };
        self.pos += 1;
        let name = match kind {
            TokenKind::Open => return self.sequence(Some(offset)),
            TokenKind::Number(n) => return Ok(vec![Node::symbol(n)]),
            TokenKind::Char(c) => return Ok(vec![Node::symbol(c.to_string())]),
            TokenKind::Command(name) => name,
            TokenKind::Align => return Ok(Vec::new()),
            other => return self.error(offset, format!("unexpected {other:?}")),
        };
        let n = name.as_str();

        if contains(commands::IGNORED, n) {
            return Ok(Vec::new());
        }
        if contains(commands::DROP_ARGUMENT, n) {
            self.raw_argument()?;
            return Ok(Vec::new());
        }
        if contains(commands::FRACTIONS, n) || contains(commands::BINOMIALS, n) {
            let over = self.argument()?;
            let under = self.argument()?;
            let symbol = if contains(commands::FRACTIONS, n) { "frac" } else { "binom" };
            let mut node = Node::new(NodeKind::Fraction, symbol);
            node.over = over;
            node.under = under;
            return Ok(vec![node]);
        }
        if n == "sqrt" {
            let index = self.optional_argument()?;
            let body = self.argument()?;
            let mut node = Node::new(NodeKind::Root, "sqrt");
            node.above = index;
            node.within = body;
            return Ok(vec![node]);
        }
        if contains(commands::DELIMITER_SIZERS, n) {
            let at = self.offset();
            return match self.peek().cloned() {
                Some(TokenKind::Char('.')) => {
                    self.pos += 1;
                    Ok(Vec::new())
                }
                Some(TokenKind::Char(c)) => {
                    self.pos += 1;
                    Ok(vec![Node::symbol(c.to_string())])
                }
                Some(TokenKind::Command(d)) => {
                    self.pos += 1;
                    Ok(vec![Node::symbol(format!("\\{d}"))])
                }
                // \big used as a plain size switch before a group
                _ if n.starts_with("big") || n.starts_with("Big") => Ok(Vec::new()),
                _ => self.error(at, format!("\\{n} without delimiter")),
            };
        }
        if contains(commands::TEXTUAL, n) {
            let text = self.raw_argument()?;
            if text.is_empty() {
                return Ok(Vec::new());
            }
            return Ok(vec![Node::new(NodeKind::OperatorName, text)]);
        }
        if contains(commands::STYLES, n) {
            return self.argument();
        }
        if contains(commands::ACCENTS, n) {
            let body = self.argument()?;
            let mut node = Node::new(NodeKind::Group, format!("\\{n}"));
            node.within = body;
            return Ok(vec![node]);
        }
        if contains(commands::OPERATOR_NAMES, n) {
            return Ok(vec![Node::new(NodeKind::OperatorName, format!("\\{n}"))]);
        }
        if contains(commands::BIG_OPERATORS, n) || contains(commands::SYMBOLS, n) || n == "not" {
            return Ok(vec![Node::symbol(format!("\\{n}"))]);
        }
        match n {
            "stackrel" | "overset" | "underset" => {
                let script = self.argument()?;
                let mut base = self.argument()?;
                if let Some(last) = base.last_mut() {
                    if n == "underset" {
                        last.under.extend(script);
                    } else {
                        last.above.extend(script);
                    }
                }
                return Ok(base);
            }
            "begin" => {
                let env = self.raw_argument()?;
                if matches!(env.trim_end_matches('*'), "array" | "tabular" | "alignedat") {
                    self.raw_argument()?;
                }
                return Ok(Vec::new());
            }
            "end" => {
                self.raw_argument()?;
                return Ok(Vec::new());
            }
            _ => {}
        }
        if self.options.lenient {
            Ok(vec![Node::symbol(format!("\\{n}"))])
        } else {
            self.error(offset, format!("unknown command \\{n}"))
        }
    }
}
