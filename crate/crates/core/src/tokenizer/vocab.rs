use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bpe::{BpeError, BpeModel};
use crate::layout::{alphabet, is_alphabet_symbol, ALPHABET_SIZE, ANGLE_RANGE};

/// Coordinate bins per axis.
pub const COORD_BINS: usize = 128;
/// Angle tokens, one per integer degree in [-90, 90].
pub const ANGLE_TOKENS: usize = 181;

pub type TokenId = u32;

/// What a token id stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TokenKind {
    Subword(TokenId),
    Char(char),
    CoordX(u8),
    CoordY(u8),
    Angle(i16),
    Eos,
    Pad,
}

impl TokenKind {
    pub fn is_coordinate(&self) -> bool {
        matches!(self, TokenKind::CoordX(_) | TokenKind::CoordY(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("base vocabulary is empty")]
    EmptyBase,
    #[error("base vocabulary already defines special token {0:?}")]
    SpecialCollision(String),
    #[error(transparent)]
    Bpe(#[from] BpeError),
}

const X_OFFSET: u32 = 0;
const Y_OFFSET: u32 = X_OFFSET + COORD_BINS as u32;
const CHAR_OFFSET: u32 = Y_OFFSET + COORD_BINS as u32;
const EOS_OFFSET: u32 = CHAR_OFFSET + ALPHABET_SIZE as u32;
const PAD_OFFSET: u32 = EOS_OFFSET + 1;
const ANGLE_OFFSET: u32 = PAD_OFFSET + 1;

/// Base subword vocabulary extended with coordinate, character, `<eos>`,
/// `<pad>` and optionally angle tokens.
///
/// Special ids follow the base ids contiguously, in that order. The id
/// assignment is arithmetic, so the kind/id mapping is a bijection by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    base: Arc<BpeModel>,
    angle: bool,
}

impl Vocabulary {
    pub fn new(base: impl Into<Arc<BpeModel>>, enable_angle: bool) -> Result<Self, VocabError> {
        let base = base.into();
        if base.is_empty() {
            return Err(VocabError::EmptyBase);
        }
        let vocab = Self { base, angle: enable_angle };
        for kind in vocab.special_kinds() {
            let surface = vocab.surface_of_special(kind);
            if vocab.base.id(&surface).is_some() {
                return Err(VocabError::SpecialCollision(surface));
            }
        }
        Ok(vocab)
    }

    /// Vocabulary over the bundled default subword model.
    pub fn default_with(enable_angle: bool) -> Self {
        Self::new(default_base(), enable_angle).expect("bundled base has no special surfaces")
    }

    pub fn base(&self) -> &BpeModel {
        &self.base
    }

    pub fn angle_enabled(&self) -> bool {
        self.angle
    }

    pub fn base_len(&self) -> usize {
        self.base.len()
    }

    pub fn special_count(&self) -> usize {
        2 * COORD_BINS + ALPHABET_SIZE + 2 + if self.angle { ANGLE_TOKENS } else { 0 }
    }

    pub fn len(&self) -> usize {
        self.base_len() + self.special_count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Every non-subword kind, in id order.
    pub fn special_kinds(&self) -> impl Iterator<Item = TokenKind> + '_ {
        let xs = (0..COORD_BINS as u8).map(TokenKind::CoordX);
        let ys = (0..COORD_BINS as u8).map(TokenKind::CoordY);
        let chars = alphabet().map(TokenKind::Char);
        let tail = [TokenKind::Eos, TokenKind::Pad];
        let angles = ANGLE_RANGE.filter(|_| self.angle).map(|a| TokenKind::Angle(a as i16));
        xs.chain(ys).chain(chars).chain(tail).chain(angles)
    }

    pub fn id_of(&self, kind: TokenKind) -> Option<TokenId> {
        let base = self.base.len() as u32;
        let offset = match kind {
            TokenKind::Subword(id) => return ((id as usize) < self.base.len()).then_some(id),
            TokenKind::CoordX(v) if (v as usize) < COORD_BINS => X_OFFSET + v as u32,
            TokenKind::CoordY(v) if (v as usize) < COORD_BINS => Y_OFFSET + v as u32,
            TokenKind::Char(c) if is_alphabet_symbol(c) => CHAR_OFFSET + (c as u32 - ' ' as u32),
            TokenKind::Eos => EOS_OFFSET,
            TokenKind::Pad => PAD_OFFSET,
            TokenKind::Angle(a) if self.angle && ANGLE_RANGE.contains(&(a as i32)) => {
                ANGLE_OFFSET + (a as i32 - ANGLE_RANGE.start()) as u32
            }
            _ => return None,
        };
        Some(base + offset)
    }

    pub fn kind_of(&self, id: TokenId) -> Option<TokenKind> {
        let base = self.base.len() as u32;
        if id < base {
            return Some(TokenKind::Subword(id));
        }
        let off = id - base;
        Some(match off {
            o if o < Y_OFFSET => TokenKind::CoordX((o - X_OFFSET) as u8),
            o if o < CHAR_OFFSET => TokenKind::CoordY((o - Y_OFFSET) as u8),
            o if o < EOS_OFFSET => TokenKind::Char(char::from_u32(' ' as u32 + (o - CHAR_OFFSET))?),
            EOS_OFFSET => TokenKind::Eos,
            PAD_OFFSET => TokenKind::Pad,
            o if self.angle && o < ANGLE_OFFSET + ANGLE_TOKENS as u32 => {
                TokenKind::Angle((o - ANGLE_OFFSET) as i16 + *ANGLE_RANGE.start() as i16)
            }
            _ => return None,
        })
    }

    fn surface_of_special(&self, kind: TokenKind) -> String {
        match kind {
            TokenKind::CoordX(v) => format!("[x{v}]"),
            TokenKind::CoordY(v) => format!("[y{v}]"),
            TokenKind::Char(c) => format!("[{c}]"),
            TokenKind::Angle(a) => format!("[a{a}]"),
            TokenKind::Eos => "<eos>".into(),
            TokenKind::Pad => "<pad>".into(),
            TokenKind::Subword(id) => self.base.token(id).unwrap_or_default().to_string(),
        }
    }

    /// Printable form of a token: `[x5]`, `[W]`, `<eos>`, or the subword.
    pub fn surface(&self, id: TokenId) -> Option<String> {
        self.kind_of(id).map(|k| self.surface_of_special(k))
    }

    pub fn pad_id(&self) -> TokenId {
        self.id_of(TokenKind::Pad).expect("pad always exists")
    }

    pub fn eos_id(&self) -> TokenId {
        self.id_of(TokenKind::Eos).expect("eos always exists")
    }
}

/// Caption-style corpus the bundled subword model is trained on.
pub const DEFAULT_CORPUS: &str = include_str!("../../resources/captions.txt");
/// Target size of the bundled subword model.
pub const DEFAULT_BASE_SIZE: usize = 1024;

static DEFAULT_BASE: LazyLock<Arc<BpeModel>> =
    LazyLock::new(|| Arc::new(BpeModel::train(DEFAULT_CORPUS.lines(), DEFAULT_BASE_SIZE)));

/// The bundled subword model, trained once per process.
pub fn default_base() -> Arc<BpeModel> {
    DEFAULT_BASE.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_of(n: usize) -> BpeModel {
        BpeModel::new((0..n).map(|i| format!("t{i}")).collect(), Vec::new()).unwrap()
    }

    #[test]
    fn sizes() {
        let v = Vocabulary::new(base_of(49152), false).unwrap();
        assert_eq!(v.len(), 49505);
        let v = Vocabulary::new(base_of(49152), true).unwrap();
        assert_eq!(v.len(), 49505 + 181);
        assert_eq!(BpeModel::new(Vec::new(), Vec::new()), Err(BpeError::Empty));
    }

    #[test]
    fn bijection() {
        let v = Vocabulary::new(base_of(10), true).unwrap();
        for id in 0..v.len() as u32 {
            let kind = v.kind_of(id).unwrap();
            assert_eq!(v.id_of(kind), Some(id));
        }
        assert_eq!(v.kind_of(v.len() as u32), None);
        let kinds: Vec<_> = v.special_kinds().collect();
        assert_eq!(kinds.len(), v.special_count());
        for (i, k) in kinds.iter().enumerate() {
            assert_eq!(v.id_of(*k), Some(10 + i as u32));
        }
    }

    #[test]
    fn surfaces() {
        let v = Vocabulary::new(base_of(3), true).unwrap();
        assert_eq!(v.surface(v.id_of(TokenKind::CoordX(5)).unwrap()).unwrap(), "[x5]");
        assert_eq!(v.surface(v.id_of(TokenKind::CoordY(70)).unwrap()).unwrap(), "[y70]");
        assert_eq!(v.surface(v.id_of(TokenKind::Char('W')).unwrap()).unwrap(), "[W]");
        assert_eq!(v.surface(v.id_of(TokenKind::Angle(-90)).unwrap()).unwrap(), "[a-90]");
        assert_eq!(v.surface(v.eos_id()).unwrap(), "<eos>");
        assert_eq!(v.surface(v.pad_id()).unwrap(), "<pad>");
    }

    #[test]
    fn collision_rejected() {
        let base = BpeModel::new(vec!["a".into(), "<eos>".into()], Vec::new()).unwrap();
        assert_eq!(Vocabulary::new(base, false), Err(VocabError::SpecialCollision("<eos>".into())));
        let base = BpeModel::new(vec!["[a5]".into()], Vec::new()).unwrap();
        assert!(Vocabulary::new(base.clone(), false).is_ok());
        assert!(Vocabulary::new(base, true).is_err());
    }

    #[test]
    fn angle_ids_absent_when_disabled() {
        let v = Vocabulary::new(base_of(3), false).unwrap();
        assert_eq!(v.id_of(TokenKind::Angle(0)), None);
        assert_eq!(v.kind_of(v.len() as u32), None);
    }

    #[test]
    fn default_vocabulary_builds() {
        let v = Vocabulary::default_with(false);
        assert!(v.base_len() > 256);
        assert!(v.base_len() <= DEFAULT_BASE_SIZE);
    }
}
