//! Display-math extraction from LaTeX sources.

use std::ops::Range;

use log::warn;

use crate::error::Error;

use super::RawDocument;

/// Start of an equation placeholder in extracted prose.
pub const PLACEHOLDER_OPEN: char = '\u{E000}';
/// End of an equation placeholder in extracted prose.
pub const PLACEHOLDER_CLOSE: char = '\u{E001}';

/// Environments whose body is display math.
pub const DISPLAY_ENVIRONMENTS: &[&str] = &[
    "equation",
    "equation*",
    "align",
    "align*",
    "eqnarray",
    "eqnarray*",
    "displaymath",
];

/// Environments whose body is split into one equation per `\\` line.
const MULTILINE_ENVIRONMENTS: &[&str] = &["align", "align*", "eqnarray", "eqnarray*"];

/// One display equation found in a document, before corpus-wide deduplication.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedEquation {
    /// Normalized LaTeX (whitespace collapsed, `\label{..}` stripped).
    pub latex: String,
    /// Byte span of the enclosing display-math region in the comment-stripped source.
    pub span: Range<usize>,
}

/// A display-math region that could not be extracted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionError {
    pub offset: usize,
    pub message: String,
}

impl From<RegionError> for Error {
    fn from(e: RegionError) -> Self {
        Error::UnbalancedMath {
            offset: e.offset,
            message: e.message,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedDocument {
    pub doc_id: String,
    /// Prose with one placeholder per extracted equation, in source order.
    pub prose: String,
    pub equations: Vec<ExtractedEquation>,
    /// Regions that could not be extracted (unbalanced delimiters).
    pub errors: Vec<RegionError>,
}

pub fn placeholder(index: usize) -> String {
    format!(" {PLACEHOLDER_OPEN}{index}{PLACEHOLDER_CLOSE} ")
}

/// Collapse whitespace runs to single spaces and strip `\label{...}`.
pub fn normalize_latex(latex: &str) -> String {
    let mut stripped = String::with_capacity(latex.len());
    let mut rest = latex;
    while let Some(at) = rest.find("\\label{") {
        stripped.push_str(&rest[..at]);
        let after = &rest[at + "\\label{".len()..];
        match matching_brace(after) {
            Some(close) => rest = &after[close + 1..],
            None => {
                // unterminated label: keep the remainder verbatim
                stripped.push_str(&rest[at..]);
                rest = "";
            }
        }
    }
    stripped.push_str(rest);
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Byte index of the `}` closing a group whose `{` was just consumed.
fn matching_brace(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut depth = 1usize;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 1,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Remove `%` comments (but not `\%`), keeping line structure.
pub fn strip_comments(source: &str) -> String {
    let mut out = String::with_capacity(source.len());
    for line in source.split_inclusive('\n') {
        let bytes = line.as_bytes();
        let mut cut = None;
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'\\' => i += 1,
                b'%' => {
                    cut = Some(i);
                    break;
                }
                _ => {}
            }
            i += 1;
        }
        match cut {
            Some(at) => {
                out.push_str(&line[..at]);
                if line.ends_with('\n') {
                    out.push('\n');
                }
            }
            None => out.push_str(line),
        }
    }
    out
}

/// Split the body of a multi-line environment on top-level `\\`.
fn split_lines(body: &str) -> Vec<&str> {
    let bytes = body.as_bytes();
    let mut lines = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => depth += 1,
            b'}' => depth -= 1,
            b'\\' if i + 1 < bytes.len() => {
                if bytes[i + 1] == b'\\' && depth == 0 {
                    lines.push(&body[start..i]);
                    i += 2;
                    // optional spacing argument: \\[2pt]
                    let rest = &body[i..];
                    let trimmed = rest.trim_start();
                    if trimmed.starts_with('[') {
                        if let Some(close) = trimmed.find(']') {
                            i += rest.len() - trimmed.len() + close + 1;
                        }
                    }
                    start = i;
                    continue;
                }
                i += 1;
            }
            _ => {}
        }
        i += 1;
    }
    lines.push(&body[start..]);
    lines
}

enum Opener {
    Env(&'static str),
    Bracket,
    Dollars,
}

fn opener_at(source: &str, at: usize) -> Option<(Opener, usize)> {
    let rest = &source[at..];
    if rest.starts_with("$$") {
        return Some((Opener::Dollars, 2));
    }
    if rest.starts_with("\\[") {
        return Some((Opener::Bracket, 2));
    }
    if let Some(after) = rest.strip_prefix("\\begin{") {
        for env in DISPLAY_ENVIRONMENTS {
            if after.starts_with(env) && after[env.len()..].starts_with('}') {
                return Some((Opener::Env(env), "\\begin{".len() + env.len() + 1));
            }
        }
    }
    None
}

/// Separate display equations from prose.
///
/// Each recognized region is replaced with a placeholder naming the
/// document-local equation index. Unbalanced regions are reported in
/// `errors` and left in the prose.
pub fn extract_display_equations(doc: &RawDocument) -> ExtractedDocument {
    let source = strip_comments(&doc.source_text);
    let bytes = source.as_bytes();
    let mut prose = String::with_capacity(source.len());
    let mut equations = Vec::new();
    let mut errors = Vec::new();
    let mut copied = 0;
    let mut i = 0;

    while i < bytes.len() {
        match bytes[i] {
            b'\\' if i + 1 < bytes.len() && matches!(bytes[i + 1], b'\\' | b'$') => {
                i += 2;
                continue;
            }
            b'\\' | b'$' => {}
            _ => {
                i += 1;
                continue;
            }
        }
        let Some((opener, open_len)) = opener_at(&source, i) else {
            i += 1;
            continue;
        };
        let body_start = i + open_len;
        let (closer, multiline) = match opener {
            Opener::Env(env) => (format!("\\end{{{env}}}"), MULTILINE_ENVIRONMENTS.contains(&env)),
            Opener::Bracket => ("\\]".to_string(), false),
            Opener::Dollars => ("$$".to_string(), false),
        };
        let Some(rel) = source[body_start..].find(&closer) else {
            let err = RegionError {
                offset: i,
                message: format!("no matching {closer}"),
            };
            warn!("{}: skipping unbalanced region at byte {}", doc.doc_id, err.offset);
            errors.push(err);
            i += open_len;
            continue;
        };
        let body_end = body_start + rel;
        let region_end = body_end + closer.len();
        let body = &source[body_start..body_end];
        prose.push_str(&source[copied..i]);
        let lines = if multiline { split_lines(body) } else { vec![body] };
        for line in lines {
            let latex = normalize_latex(line);
            if latex.is_empty() {
                continue;
            }
            prose.push_str(&placeholder(equations.len()));
            equations.push(ExtractedEquation {
                latex,
                span: i..region_end,
            });
        }
        copied = region_end;
        i = region_end;
    }
    prose.push_str(&source[copied..]);

    ExtractedDocument {
        doc_id: doc.doc_id.clone(),
        prose,
        equations,
        errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> RawDocument {
        RawDocument::new("d", text).unwrap()
    }

    #[test]
    fn single_equation_environment() {
        let out = extract_display_equations(&doc("We have \\begin{equation}x+y\\end{equation} here."));
        assert_eq!(out.equations.len(), 1);
        assert_eq!(out.equations[0].latex, "x+y");
        assert_eq!(out.prose.matches(PLACEHOLDER_OPEN).count(), 1);
        assert!(out.errors.is_empty());
    }

    #[test]
    fn no_display_math_is_identity() {
        let text = "Plain prose with inline $x$ math.";
        let out = extract_display_equations(&doc(text));
        assert!(out.equations.is_empty());
        assert_eq!(out.prose, text);
    }

    #[test]
    fn all_delimiters_recognized() {
        let text = "a $$p$$ b \\[q\\] c \\begin{equation*}r\\end{equation*} \
                    \\begin{displaymath}s\\end{displaymath} \\begin{eqnarray}t\\end{eqnarray}";
        let out = extract_display_equations(&doc(text));
        let latex: Vec<_> = out.equations.iter().map(|e| e.latex.as_str()).collect();
        assert_eq!(latex, ["p", "q", "r", "s", "t"]);
    }

    #[test]
    fn align_lines_become_separate_equations() {
        let text = "\\begin{align} a &= b \\label{eq:1} \\\\[3pt] c &= d \\\\ \\end{align}";
        let out = extract_display_equations(&doc(text));
        let latex: Vec<_> = out.equations.iter().map(|e| e.latex.as_str()).collect();
        assert_eq!(latex, ["a &= b", "c &= d"]);
    }

    #[test]
    fn unbalanced_region_is_skipped_not_fatal() {
        let text = "good $$a$$ then \\begin{equation} broken";
        let out = extract_display_equations(&doc(text));
        assert_eq!(out.equations.len(), 1);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].offset, 16);
    }

    #[test]
    fn escaped_dollars_and_line_breaks_are_not_openers() {
        let text = "costs \\$\\$5 and line\\\\[2pt] next";
        let out = extract_display_equations(&doc(text));
        assert!(out.equations.is_empty());
        assert!(out.errors.is_empty());
    }

    #[test]
    fn comments_are_ignored() {
        let text = "text % $$hidden$$\nmore 50\\% $$shown$$";
        let out = extract_display_equations(&doc(text));
        assert_eq!(out.equations.len(), 1);
        assert_eq!(out.equations[0].latex, "shown");
    }

    #[test]
    fn normalization_collapses_whitespace_and_labels() {
        assert_eq!(normalize_latex("  a +\n\t b \\label{x{y}} "), "a + b");
    }

    #[test]
    fn placeholders_follow_region_order() {
        let text = "one $$a$$ two \\[b\\] three";
        let out = extract_display_equations(&doc(text));
        let spans: Vec<_> = out.equations.iter().map(|e| e.span.clone()).collect();
        assert!(spans.windows(2).all(|w| w[0].end <= w[1].start));
        for (idx, eq) in out.equations.iter().enumerate() {
            let region = &text[eq.span.clone()];
            assert!(region.contains(&eq.latex));
            assert!(out.prose.contains(&placeholder(idx)));
        }
        let first = out.prose.find(&placeholder(0)).unwrap();
        let second = out.prose.find(&placeholder(1)).unwrap();
        assert!(first < second);
    }
}
