use crate::error::{Error, Result};

use super::{RawToken, TokenizedDocument, Vocabulary};

/// Sentinel id for a gap in the binary stream encoding.
pub const GAP_SENTINEL: u32 = u32::MAX;
/// Tag bit marking an equation id in the binary stream encoding.
pub const EQUATION_TAG: u32 = 1 << 31;

/// One position of a token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Item {
    Word(u32),
    Equation(u32),
    /// Out-of-vocabulary token; holds a position, never enters a context.
    Gap,
}

impl Item {
    pub fn encode(self) -> u32 {
        match self {
            Item::Word(id) => id,
            Item::Equation(id) => id | EQUATION_TAG,
            Item::Gap => GAP_SENTINEL,
        }
    }

    pub fn decode(raw: u32) -> Self {
        if raw == GAP_SENTINEL {
            Item::Gap
        } else if raw & EQUATION_TAG != 0 {
            Item::Equation(raw & !EQUATION_TAG)
        } else {
            Item::Word(raw)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub doc_id: String,
    pub items: Vec<Item>,
}

impl TokenStream {
    pub fn word_count(&self) -> usize {
        self.items.iter().filter(|i| matches!(i, Item::Word(_))).count()
    }

    /// Positions within `half` of `center` (excluding it), clipped to the
    /// document.
    pub fn window(&self, center: usize, half: usize) -> impl Iterator<Item = (usize, Item)> + '_ {
        let lo = center.saturating_sub(half);
        let hi = (center + half).min(self.items.len().saturating_sub(1));
        (lo..=hi)
            .filter(move |&p| p != center)
            .map(move |p| (p, self.items[p]))
    }

    /// Word ids within `half` positions of `center`.
    pub fn words_around(&self, center: usize, half: usize) -> impl Iterator<Item = u32> + '_ {
        self.window(center, half).filter_map(|(_, item)| match item {
            Item::Word(id) => Some(id),
            _ => None,
        })
    }

    /// Equation ids within `half` positions of `center`.
    pub fn equations_around(&self, center: usize, half: usize) -> impl Iterator<Item = u32> + '_ {
        self.window(center, half).filter_map(|(_, item)| match item {
            Item::Equation(id) => Some(id),
            _ => None,
        })
    }
}

/// Map tokenized documents onto vocabulary and registry ids.
pub fn build_token_streams(docs: &[TokenizedDocument], vocab: &Vocabulary) -> Result<Vec<TokenStream>> {
    docs.iter()
        .map(|doc| {
            let items = doc
                .tokens
                .iter()
                .map(|token| match token {
                    RawToken::Word(w) => Ok(vocab.id(w).map_or(Item::Gap, Item::Word)),
                    RawToken::Equation(local) => doc.eq_ids.get(*local).map(|&id| Item::Equation(id)).ok_or_else(|| {
                        Error::UnknownPlaceholder {
                            doc_id: doc.doc_id.clone(),
                            index: *local,
                        }
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TokenStream {
                doc_id: doc.doc_id.clone(),
                items,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::VocabKind;

    fn vocab() -> Vocabulary {
        Vocabulary::from_counts(VocabKind::Word, [("model".to_string(), 50)])
    }

    #[test]
    fn maps_words_equations_and_gaps() {
        let doc = TokenizedDocument {
            doc_id: "d".into(),
            tokens: vec![RawToken::Word("the".into()), RawToken::Word("model".into()), RawToken::Equation(0)],
            eq_ids: vec![7],
        };
        let streams = build_token_streams(&[doc], &vocab()).unwrap();
        assert_eq!(streams[0].items, [Item::Gap, Item::Word(0), Item::Equation(7)]);
    }

    #[test]
    fn unknown_placeholder_is_an_error() {
        let doc = TokenizedDocument {
            doc_id: "d".into(),
            tokens: vec![RawToken::Equation(2)],
            eq_ids: vec![7],
        };
        assert!(matches!(
            build_token_streams(&[doc], &vocab()),
            Err(Error::UnknownPlaceholder { index: 2, .. })
        ));
    }

    #[test]
    fn word_window_excludes_equations_but_wider_window_sees_them() {
        // word at position 0, EQ7 two positions to its right
        let stream = TokenStream {
            doc_id: "d".into(),
            items: vec![Item::Word(0), Item::Word(1), Item::Equation(7), Item::Word(2)],
        };
        let word_ctx: Vec<_> = stream.words_around(0, 2).collect();
        assert_eq!(word_ctx, [1]);
        let eq_ctx: Vec<_> = stream.equations_around(0, 8).collect();
        assert_eq!(eq_ctx, [7]);
    }

    #[test]
    fn windows_truncate_at_document_edges() {
        let stream = TokenStream {
            doc_id: "d".into(),
            items: vec![Item::Equation(0), Item::Word(1), Item::Gap, Item::Word(3)],
        };
        let ctx: Vec<_> = stream.words_around(0, 8).collect();
        assert_eq!(ctx, [1, 3]);
    }

    #[test]
    fn item_codec() {
        for item in [Item::Word(0), Item::Word(12345), Item::Equation(0), Item::Equation(99), Item::Gap] {
            assert_eq!(Item::decode(item.encode()), item);
        }
    }
}
