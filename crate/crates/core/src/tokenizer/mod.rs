//! Hybrid-granularity encoding of a prompt and its layout.
//!
//! A composed sequence is the subword encoding of the prompt followed, for
//! each text line, by the keyword tokens, the coordinate tokens and one
//! `<eos>`. The remainder up to the maximum length is `<pad>`.
//!
//! ```text
//! a ▁sign [H] [I] [x10] [y20] [x40] [y35] <eos> <pad> <pad> ...
//! ```

pub mod bpe;
pub mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bpe::{BpeError, BpeModel};
pub use vocab::{TokenId, TokenKind, Vocabulary, VocabError, ANGLE_TOKENS, COORD_BINS};

use crate::grammar::{convert_box, ReprVariant};
use crate::layout::{is_alphabet_symbol, BoxRepr, Canvas, Layout, TextLine};

/// Default maximum sequence length.
pub const DEFAULT_MAX_LEN: usize = 128;
/// Maximum sequence length used with quadrilateral boxes.
pub const QUAD_MAX_LEN: usize = 256;

/// How keywords are tokenized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizationLevel {
    #[default]
    Char,
    Subword,
}

impl std::str::FromStr for TokenizationLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char" => Ok(TokenizationLevel::Char),
            "subword" => Ok(TokenizationLevel::Subword),
            _ => Err(format!("unknown tokenization level {s:?}; expected char or subword")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("symbol at position {0} is outside the alphabet")]
    NonAlphabetSymbol(usize),
    #[error("keyword is empty")]
    EmptyKeyword,
    #[error("composed sequence needs {required} tokens but the maximum length is {max}")]
    SequenceTooLong { required: usize, max: usize },
    #[error("line {line}: cannot express box as {variant}")]
    Inconvertible { line: usize, variant: ReprVariant },
    #[error("angle tokens are not enabled in this vocabulary")]
    AngleDisabled,
    #[error("malformed token sequence: {0}")]
    Structure(String),
    #[error(transparent)]
    Bpe(#[from] BpeError),
}

/// Keyword tokens at the given level.
pub fn tokenize_keyword(word: &str, level: TokenizationLevel, vocab: &Vocabulary) -> Result<Vec<TokenKind>, TokenizeError> {
    if word.is_empty() {
        return Err(TokenizeError::EmptyKeyword);
    }
    if let Some(pos) = word.chars().position(|c| !is_alphabet_symbol(c)) {
        return Err(TokenizeError::NonAlphabetSymbol(pos));
    }
    Ok(match level {
        TokenizationLevel::Char => word.chars().map(TokenKind::Char).collect(),
        TokenizationLevel::Subword => vocab.base().encode(word)?.into_iter().map(TokenKind::Subword).collect(),
    })
}

/// Coordinate bin for a grid value; the far edge shares the last bin.
pub fn coordinate_bin(value: i32) -> u8 {
    value.clamp(0, COORD_BINS as i32 - 1) as u8
}

/// Coordinate (and angle) tokens for a box, in its own representation.
pub fn coordinate_tokens(bbox: &BoxRepr) -> Vec<TokenKind> {
    let variant = ReprVariant::of(bbox);
    bbox.coordinates()
        .into_iter()
        .enumerate()
        .map(|(slot, v)| {
            if variant.is_angle_slot(slot) {
                TokenKind::Angle(v.clamp(-90, 90) as i16)
            } else if variant.is_y_slot(slot) {
                TokenKind::CoordY(coordinate_bin(v))
            } else {
                TokenKind::CoordX(coordinate_bin(v))
            }
        })
        .collect()
}

/// Tokenization settings shared by encode, decode and length analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EncodeOptions {
    pub level: TokenizationLevel,
    pub variant: ReprVariant,
}

fn compose(prompt: &str, layout: &Layout, vocab: &Vocabulary, opts: EncodeOptions) -> Result<(Vec<TokenKind>, usize), TokenizeError> {
    let mut kinds: Vec<TokenKind> = vocab.base().encode(prompt)?.into_iter().map(TokenKind::Subword).collect();
    let prompt_len = kinds.len();
    for (i, line) in layout.lines.iter().enumerate() {
        kinds.extend(tokenize_keyword(&line.content, opts.level, vocab)?);
        let bbox = convert_box(&line.bbox, opts.variant)
            .ok_or(TokenizeError::Inconvertible { line: i, variant: opts.variant })?;
        kinds.extend(coordinate_tokens(&bbox));
        kinds.push(TokenKind::Eos);
    }
    if opts.variant == ReprVariant::LtrbAngle && !vocab.angle_enabled() {
        return Err(TokenizeError::AngleDisabled);
    }
    Ok((kinds, prompt_len))
}

/// Length of the composed sequence before padding.
pub fn composed_length(prompt: &str, layout: &Layout, vocab: &Vocabulary, opts: EncodeOptions) -> Result<usize, TokenizeError> {
    compose(prompt, layout, vocab, opts).map(|(k, _)| k.len())
}

/// Fixed-length encoded sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<TokenId>,
    pub kinds: Vec<TokenKind>,
    pub max_len: usize,
    pub options: EncodeOptions,
    /// Number of leading prompt tokens. Needed to split prompt from the
    /// first keyword at subword level, where both are subword tokens.
    pub prompt_len: Option<usize>,
}

impl TokenSequence {
    /// Wraps raw ids, checking length, id validity and the padding law.
    pub fn from_ids(
        ids: Vec<TokenId>,
        max_len: usize,
        options: EncodeOptions,
        prompt_len: Option<usize>,
        vocab: &Vocabulary,
    ) -> Result<Self, TokenizeError> {
        let structure = |m: String| TokenizeError::Structure(m);
        if ids.len() != max_len {
            return Err(structure(format!("expected {max_len} ids, found {}", ids.len())));
        }
        let kinds = ids
            .iter()
            .map(|&id| vocab.kind_of(id).ok_or_else(|| structure(format!("unknown token id {id}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first_pad) = kinds.iter().position(|k| *k == TokenKind::Pad) {
            if kinds[first_pad..].iter().any(|k| *k != TokenKind::Pad) {
                return Err(structure("non-pad token after padding".into()));
            }
        }
        Ok(Self { ids, kinds, max_len, options, prompt_len })
    }

    /// Tokens before padding.
    pub fn content_len(&self) -> usize {
        self.kinds.iter().position(|k| *k == TokenKind::Pad).unwrap_or(self.kinds.len())
    }

    pub fn to_record(&self) -> TokenRecord {
        TokenRecord {
            ids: self.ids.clone(),
            max_len: self.max_len,
            variant: self.options.variant,
            level: self.options.level,
            prompt_len: self.prompt_len,
        }
    }
}

/// Exported form of a [`TokenSequence`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub ids: Vec<TokenId>,
    #[serde(rename = "L")]
    pub max_len: usize,
    #[serde(default)]
    pub variant: ReprVariant,
    #[serde(default)]
    pub level: TokenizationLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_len: Option<usize>,
}

impl TokenRecord {
    pub fn into_sequence(self, vocab: &Vocabulary) -> Result<TokenSequence, TokenizeError> {
        let options = EncodeOptions { level: self.level, variant: self.variant };
        TokenSequence::from_ids(self.ids, self.max_len, options, self.prompt_len, vocab)
    }
}

/// Encodes `prompt` and `layout` into exactly `max_len` tokens.
pub fn encode(
    prompt: &str,
    layout: &Layout,
    vocab: &Vocabulary,
    opts: EncodeOptions,
    max_len: usize,
) -> Result<TokenSequence, TokenizeError> {
    let (mut kinds, prompt_len) = compose(prompt, layout, vocab, opts)?;
    if kinds.len() > max_len {
        return Err(TokenizeError::SequenceTooLong { required: kinds.len(), max: max_len });
    }
    kinds.resize(max_len, TokenKind::Pad);
    let ids = kinds
        .iter()
        .map(|k| vocab.id_of(*k).ok_or_else(|| TokenizeError::Structure(format!("no id for {k:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TokenSequence { ids, kinds, max_len, options: opts, prompt_len: Some(prompt_len) })
}

/// Inverse of [`encode`]. The decoded layout sits on the default canvas.
pub fn decode(seq: &TokenSequence, vocab: &Vocabulary) -> Result<(String, Layout), TokenizeError> {
    let structure = |m: &str| TokenizeError::Structure(m.to_string());
    let checked = TokenSequence::from_ids(seq.ids.clone(), seq.max_len, seq.options, seq.prompt_len, vocab)?;
    let kinds = &checked.kinds[..checked.content_len()];
    let opts = seq.options;

    let prompt_end = match (opts.level, seq.prompt_len) {
        (_, Some(n)) => {
            if n > kinds.len() || kinds[..n].iter().any(|k| !matches!(k, TokenKind::Subword(_))) {
                return Err(structure("prompt length does not match the sequence"));
            }
            n
        }
        (TokenizationLevel::Char, None) => {
            kinds.iter().position(|k| !matches!(k, TokenKind::Subword(_))).unwrap_or(kinds.len())
        }
        (TokenizationLevel::Subword, None) => {
            let n = kinds.iter().position(|k| !matches!(k, TokenKind::Subword(_))).unwrap_or(kinds.len());
            if n != kinds.len() {
                return Err(structure("prompt boundary is ambiguous at subword level without prompt_len"));
            }
            n
        }
    };
    let subword_ids = |ks: &[TokenKind]| -> Vec<TokenId> {
        ks.iter()
            .filter_map(|k| match k {
                TokenKind::Subword(id) => Some(*id),
                _ => None,
            })
            .collect()
    };
    let prompt = vocab.base().decode(&subword_ids(&kinds[..prompt_end]))?;

    let arity = opts.variant.arity();
    let mut lines = Vec::new();
    let mut i = prompt_end;
    while i < kinds.len() {
        let start = i;
        while i < kinds.len()
            && matches!(
                (opts.level, kinds[i]),
                (TokenizationLevel::Char, TokenKind::Char(_)) | (TokenizationLevel::Subword, TokenKind::Subword(_))
            )
        {
            i += 1;
        }
        if i == start {
            return Err(structure("text line without keyword tokens"));
        }
        let content: String = match opts.level {
            TokenizationLevel::Char => kinds[start..i]
                .iter()
                .map(|k| match k {
                    TokenKind::Char(c) => *c,
                    _ => unreachable!("filtered above"),
                })
                .collect(),
            TokenizationLevel::Subword => vocab.base().decode(&subword_ids(&kinds[start..i]))?,
        };
        let mut coords = Vec::with_capacity(arity);
        while i < kinds.len() && coords.len() < arity + 1 {
            let slot = coords.len();
            let value = match kinds[i] {
                TokenKind::CoordX(v) if slot < arity && !opts.variant.is_y_slot(slot) && !opts.variant.is_angle_slot(slot) => v as i32,
                TokenKind::CoordY(v) if slot < arity && opts.variant.is_y_slot(slot) => v as i32,
                TokenKind::Angle(a) if slot < arity && opts.variant.is_angle_slot(slot) => a as i32,
                TokenKind::Eos => break,
                other => {
                    return Err(TokenizeError::Structure(format!(
                        "unexpected {other:?} at coordinate slot {slot} for {}",
                        opts.variant
                    )))
                }
            };
            coords.push(value);
            i += 1;
        }
        if coords.len() != arity {
            return Err(TokenizeError::Structure(format!(
                "expected {arity} coordinates for {}, found {}",
                opts.variant,
                coords.len()
            )));
        }
        if i >= kinds.len() || kinds[i] != TokenKind::Eos {
            return Err(structure("missing <eos> before padding"));
        }
        i += 1;
        let bbox = opts.variant.make_box(&coords).expect("arity checked");
        lines.push(TextLine { content, bbox });
    }
    Ok((prompt, Layout::new(lines, Canvas::default())))
}
