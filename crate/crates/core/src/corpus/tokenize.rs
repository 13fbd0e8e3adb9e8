//! Word tokenization of extracted prose.

use std::sync::OnceLock;

use regex::Regex;

use super::extract::{PLACEHOLDER_CLOSE, PLACEHOLDER_OPEN};

/// A token of extracted prose: a lowercased word or an equation marker
/// carrying the document-local equation index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RawToken {
    Word(String),
    Equation(usize),
}

/// Commands whose braced arguments are references or layout, never prose.
const ARGUMENT_DROPPING_COMMANDS: &[&str] = &[
    "autoref", "begin", "bibliography", "bibliographystyle", "cite", "citealp", "citep", "citet",
    "cref", "Cref", "def", "documentclass", "end", "eqref", "hspace", "href", "include",
    "includegraphics", "input", "label", "newcommand", "pageref", "ref", "renewcommand",
    "setlength", "url", "usepackage", "vspace",
];

fn token_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(&format!(
            "{PLACEHOLDER_OPEN}([0-9]+){PLACEHOLDER_CLOSE}|[A-Za-z]+(?:-[A-Za-z]+)*"
        ))
        .expect("valid token pattern")
    })
}

/// Skip a run of `{...}` / `[...]` arguments starting at `i`, returning the
/// index after the last one.
fn skip_arguments(bytes: &[u8], mut i: usize) -> usize {
    loop {
        let mut j = i;
        while j < bytes.len() && bytes[j].is_ascii_whitespace() {
            j += 1;
        }
        let (open, close) = match bytes.get(j) {
            Some(b'{') => (b'{', b'}'),
            Some(b'[') => (b'[', b']'),
            _ => return i,
        };
        let mut depth = 0usize;
        let mut k = j;
        while k < bytes.len() {
            let c = bytes[k];
            if c == b'\\' {
                k += 2;
                continue;
            }
            if c == open {
                depth += 1;
            } else if c == close {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            k += 1;
        }
        i = (k + 1).min(bytes.len());
    }
}

/// Drop LaTeX markup that never carries prose words: inline math, command
/// names, and the arguments of reference/layout commands. Text before
/// `\begin{document}` and after `\end{document}` is dropped as well.
pub fn strip_markup(prose: &str) -> String {
    let body = match prose.find("\\begin{document}") {
        Some(at) => &prose[at + "\\begin{document}".len()..],
        None => prose,
    };
    let body = match body.find("\\end{document}") {
        Some(at) => &body[..at],
        None => body,
    };
    let bytes = body.as_bytes();
    let mut out = String::with_capacity(body.len());
    let mut copied = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => {
                out.push_str(&body[copied..i]);
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_alphabetic() {
                    j += 1;
                }
                if j == i + 1 {
                    // control symbol such as \( \% \\
                    if bytes.get(j) == Some(&b'(') {
                        j = body[j..].find("\\)").map_or(bytes.len(), |p| j + p + 2);
                    } else {
                        j = (j + 1).min(bytes.len());
                        while !body.is_char_boundary(j) {
                            j += 1;
                        }
                    }
                } else if ARGUMENT_DROPPING_COMMANDS.contains(&&body[i + 1..j]) {
                    j = skip_arguments(bytes, j);
                }
                out.push(' ');
                i = j;
                copied = j;
            }
            b'$' => {
                out.push_str(&body[copied..i]);
                let close = body[i + 1..].find('$').map_or(bytes.len(), |p| i + 1 + p + 1);
                out.push(' ');
                i = close;
                copied = close;
            }
            _ => i += 1,
        }
    }
    out.push_str(&body[copied..]);
    out
}

/// Lowercased alphabetic tokens (hyphenated compounds kept whole) and
/// equation markers, in document order. Punctuation and numerals are dropped.
pub fn tokenize_words(prose: &str) -> Vec<RawToken> {
    let cleaned = strip_markup(prose);
    token_pattern()
        .captures_iter(&cleaned)
        .map(|caps| match caps.get(1) {
            Some(index) => RawToken::Equation(index.as_str().parse().expect("digits")),
            None => RawToken::Word(caps[0].to_lowercase()),
        })
        .collect()
}
