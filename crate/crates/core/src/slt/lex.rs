use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum TokenKind {
    /// `\name` with alphabetic name, or a control symbol such as `\{`.
    Command(String),
    Open,
    Close,
    Superscript,
    Subscript,
    Prime,
    Align,
    Number(String),
    Char(char),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub offset: usize,
}

pub(crate) fn lex(latex: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = latex.char_indices().peekable();
    while let Some((offset, c)) = chars.next() {
        let kind = match c {
            c if c.is_whitespace() => continue,
            '\\' => {
                let mut name = String::new();
                while let Some(&(_, n)) = chars.peek() {
                    if n.is_ascii_alphabetic() {
                        name.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    match chars.next() {
                        Some((_, n)) => name.push(n),
                        None => {
                            return Err(Error::MathParse {
                                offset,
                                message: "dangling backslash".into(),
                            })
                        }
                    }
                } else if matches!(chars.peek(), Some((_, '*'))) {
                    // starred variants (\operatorname*) behave like the plain command
                    chars.next();
                }
                TokenKind::Command(name)
            }
            '{' => TokenKind::Open,
            '}' => TokenKind::Close,
            '^' => TokenKind::Superscript,
            '_' => TokenKind::Subscript,
            '\'' => TokenKind::Prime,
            '&' => TokenKind::Align,
            '~' => continue,
            d if d.is_ascii_digit() => {
                let mut number = String::from(d);
                while let Some(&(_, n)) = chars.peek() {
                    if n.is_ascii_digit() {
                        number.push(n);
                        chars.next();
                    } else if n == '.' {
                        // only a decimal point when a digit follows
                        let mut look = chars.clone();
                        look.next();
                        if matches!(look.peek(), Some((_, m)) if m.is_ascii_digit()) {
                            number.push(n);
                            chars.next();
                        } else {
                            break;
                        }
                    } else {
                        break;
                    }
                }
                TokenKind::Number(number)
            }
            other => TokenKind::Char(other),
        };
        tokens.push(Token { kind, offset });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        lex(s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn commands_numbers_and_chars() {
        use TokenKind::*;
        assert_eq!(
            kinds("\\alpha_{12} + 3.5x\\,"),
            [
                Command("alpha".into()),
                Subscript,
                Open,
                Number("12".into()),
                Close,
                Char('+'),
                Number("3.5".into()),
                Char('x'),
                Command(",".into())
            ]
        );
    }

    #[test]
    fn trailing_period_is_not_decimal() {
        assert_eq!(kinds("2."), [TokenKind::Number("2".into()), TokenKind::Char('.')]);
    }

    #[test]
    fn dangling_backslash() {
        assert!(matches!(lex("x\\"), Err(Error::MathParse { offset: 1, .. })));
    }
}
