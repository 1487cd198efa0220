//! Minimal byte-pair-merge subword tokenizer.
//!
//! Text is split into units: a space becomes the word-start marker `▁`,
//! characters present in the vocabulary map to themselves, and everything
//! else (control characters, a literal `▁`, unseen symbols) falls back to
//! one `<0xNN>` token per UTF-8 byte. Words start at each marker; inside a
//! word, merges apply lowest rank first until none applies. Byte-fallback
//! tokens never merge, which keeps decoding exact.
//!
//! Vocabulary file layout:
//!
//! ```text
//! #glyphplan-bpe v1
//! <token surface, one per line, in id order>
//! #merges v1
//! <left surface> <right surface>
//! ```
//!
//! Surfaces never contain an ASCII space, so the header lines (which do)
//! cannot collide with tokens.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

pub const SPACE_MARKER: char = '\u{2581}';
const VOCAB_HEADER: &str = "#glyphplan-bpe v1";
const MERGES_HEADER: &str = "#merges v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BpeError {
    #[error("vocabulary is empty")]
    Empty,
    #[error("vocabulary file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("duplicate token {0:?}")]
    DuplicateToken(String),
    #[error("merge {left:?} + {right:?} references an unknown token")]
    UnknownMergeOperand { left: String, right: String },
    #[error("symbol {0:?} is not in the vocabulary and no byte fallback exists")]
    UnknownSymbol(char),
    #[error("token id {0} is out of range")]
    UnknownId(u32),
}

fn byte_token(b: u8) -> String {
    format!("<0x{b:02X}>")
}

fn parse_byte_token(s: &str) -> Option<u8> {
    let hex = s.strip_prefix("<0x")?.strip_suffix('>')?;
    if hex.len() != 2 {
        return None;
    }
    u8::from_str_radix(hex, 16).ok()
}

#[derive(Debug, Clone, Copy)]
enum Unit {
    Mergeable(u32),
    Atomic(u32),
}

impl Unit {
    fn id(self) -> u32 {
        match self {
            Unit::Mergeable(id) | Unit::Atomic(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    merges: Vec<(u32, u32)>,
    ranks: HashMap<(u32, u32), (usize, u32)>,
    byte_ids: Vec<Option<u32>>,
}

impl BpeModel {
    /// Builds a model from token surfaces (id order) and merge rules as
    /// surface pairs.
    pub fn new(tokens: Vec<String>, merges: Vec<(String, String)>) -> Result<Self, BpeError> {
        if tokens.is_empty() {
            return Err(BpeError::Empty);
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), id as u32).is_some() {
                return Err(BpeError::DuplicateToken(t.clone()));
            }
        }
        let mut pairs = Vec::with_capacity(merges.len());
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (l, r)) in merges.into_iter().enumerate() {
            let unknown = || BpeError::UnknownMergeOperand { left: l.clone(), right: r.clone() };
            let lid = *index.get(&l).ok_or_else(unknown)?;
            let rid = *index.get(&r).ok_or_else(unknown)?;
            let merged = *index.get(&format!("{l}{r}")).ok_or_else(unknown)?;
            pairs.push((lid, rid));
            ranks.entry((lid, rid)).or_insert((rank, merged));
        }
        let byte_ids = (0..=255u8).map(|b| index.get(&byte_token(b)).copied()).collect();
        Ok(Self { tokens, index, merges: pairs, ranks, byte_ids })
    }

    /// Trains merges over `corpus` until the vocabulary reaches
    /// `vocab_size` or no pair occurs at least twice. The base alphabet is
    /// the 256 byte tokens, the space marker and every mergeable character
    /// in the corpus.
    pub fn train<'a>(corpus: impl IntoIterator<Item = &'a str>, vocab_size: usize) -> Self {
        let mut tokens: Vec<String> = (0..=255u8).map(byte_token).collect();
        let mut word_counts: HashMap<String, usize> = HashMap::new();
        let mut chars: Vec<char> = vec![SPACE_MARKER];
        for text in corpus {
            for word in split_words(text) {
                for c in word.chars() {
                    if is_mergeable_char(c) || c == SPACE_MARKER {
                        chars.push(c);
                    }
                }
                *word_counts.entry(word).or_default() += 1;
            }
        }
        chars.sort_unstable();
        chars.dedup();
        tokens.extend(chars.iter().map(|c| c.to_string()));
        let mut index: HashMap<String, u32> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();

        // Each word as a list of symbol runs; `None` marks a fallback boundary.
        let mut words: Vec<(Vec<Option<u32>>, usize)> = {
            let mut sorted: Vec<_> = word_counts.into_iter().collect();
            sorted.sort();
            sorted
                .into_iter()
                .map(|(w, n)| (w.chars().map(|c| index.get(c.to_string().as_str()).copied()).collect(), n))
                .collect()
        };
        let mut merges: Vec<(String, String)> = Vec::new();
        while tokens.len() < vocab_size {
            let mut counts: HashMap<(u32, u32), usize> = HashMap::new();
            for (syms, n) in &words {
                for w in syms.windows(2) {
                    if let [Some(a), Some(b)] = w {
                        *counts.entry((*a, *b)).or_default() += n;
                    }
                }
            }
            let best = counts
                .into_iter()
                .filter(|&(_, n)| n >= 2)
                .max_by(|(pa, na), (pb, nb)| {
                    na.cmp(nb).then_with(|| {
                        let ka = (&tokens[pa.0 as usize], &tokens[pa.1 as usize]);
                        let kb = (&tokens[pb.0 as usize], &tokens[pb.1 as usize]);
                        kb.cmp(&ka)
                    })
                });
            let Some(((a, b), _)) = best else { break };
            let surface = format!("{}{}", tokens[a as usize], tokens[b as usize]);
            let merged = match index.get(&surface) {
                Some(&id) => id,
                None => {
                    let id = tokens.len() as u32;
                    tokens.push(surface.clone());
                    index.insert(surface, id);
                    id
                }
            };
            merges.push((tokens[a as usize].clone(), tokens[b as usize].clone()));
            for (syms, _) in &mut words {
                let mut out = Vec::with_capacity(syms.len());
                let mut i = 0;
                while i < syms.len() {
                    if i + 1 < syms.len() && syms[i] == Some(a) && syms[i + 1] == Some(b) {
                        out.push(Some(merged));
                        i += 2;
                    } else {
                        out.push(syms[i]);
                        i += 1;
                    }
                }
                *syms = out;
            }
        }
        Self::new(tokens, merges).expect("trained vocabulary is consistent")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, surface: &str) -> Option<u32> {
        self.index.get(surface).copied()
    }

    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }

    fn units(&self, text: &str) -> Result<Vec<Vec<Unit>>, BpeError> {
        let mut words: Vec<Vec<Unit>> = Vec::new();
        let mut buf = [0u8; 4];
        for c in text.chars() {
            if c == ' ' || words.is_empty() {
                words.push(Vec::new());
            }
            let word = words.last_mut().expect("pushed above");
            let direct = if c == ' ' {
                self.id(SPACE_MARKER.encode_utf8(&mut buf))
            } else if is_mergeable_char(c) {
                self.id(c.encode_utf8(&mut buf))
            } else {
                None
            };
            match direct {
                Some(id) => word.push(Unit::Mergeable(id)),
                None => {
                    for b in c.encode_utf8(&mut buf).bytes() {
                        let id = self.byte_ids[b as usize].ok_or(BpeError::UnknownSymbol(c))?;
                        word.push(Unit::Atomic(id));
                    }
                }
            }
        }
        Ok(words)
    }

    fn merge_word(&self, word: &mut Vec<Unit>) {
        loop {
            let mut best: Option<(usize, usize, u32)> = None;
            for i in 0..word.len().saturating_sub(1) {
                if let (Unit::Mergeable(a), Unit::Mergeable(b)) = (word[i], word[i + 1]) {
                    if let Some(&(rank, merged)) = self.ranks.get(&(a, b)) {
                        if best.is_none_or(|(r, _, _)| rank < r) {
                            best = Some((rank, i, merged));
                        }
                    }
                }
            }
            let Some((rank, _, merged)) = best else { return };
            let target = self.merges[rank];
            let mut out = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() {
                    if let (Unit::Mergeable(a), Unit::Mergeable(b)) = (word[i], word[i + 1]) {
                        if (a, b) == target {
                            out.push(Unit::Mergeable(merged));
                            i += 2;
                            continue;
                        }
                    }
                }
                out.push(word[i]);
                i += 1;
            }
            *word = out;
        }
    }

    pub fn encode(&self, text: &str) -> Result<Vec<u32>, BpeError> {
        let mut ids = Vec::new();
        for mut word in self.units(text)? {
            self.merge_word(&mut word);
            ids.extend(word.into_iter().map(Unit::id));
        }
        Ok(ids)
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String, BpeError> {
        let mut bytes = Vec::new();
        for &id in ids {
            let surface = self.token(id).ok_or(BpeError::UnknownId(id))?;
            match parse_byte_token(surface) {
                Some(b) => bytes.push(b),
                None => {
                    for c in surface.chars() {
                        let c = if c == SPACE_MARKER { ' ' } else { c };
                        let mut buf = [0u8; 4];
                        bytes.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
                    }
                }
            }
        }
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str(VOCAB_HEADER);
        out.push('\n');
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out.push_str(MERGES_HEADER);
        out.push('\n');
        for &(a, b) in &self.merges {
            let _ = writeln!(out, "{} {}", self.tokens[a as usize], self.tokens[b as usize]);
        }
        out
    }

    pub fn from_file_str(text: &str) -> Result<Self, BpeError> {
        let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
        match lines.next() {
            Some((_, VOCAB_HEADER)) => {}
            _ => return Err(BpeError::Format { line: 1, reason: format!("expected header {VOCAB_HEADER:?}") }),
        }
        let mut tokens = Vec::new();
        let mut merges = Vec::new();
        let mut in_merges = false;
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if line == MERGES_HEADER {
                in_merges = true;
                continue;
            }
            if in_merges {
                let (l, r) = line
                    .split_once(' ')
                    .ok_or_else(|| BpeError::Format { line: n, reason: "merge needs two surfaces".into() })?;
                merges.push((l.to_string(), r.to_string()));
            } else {
                if line.contains(' ') {
                    return Err(BpeError::Format { line: n, reason: "token surface contains a space".into() });
                }
                tokens.push(line.to_string());
            }
        }
        Self::new(tokens, merges)
    }
}

fn is_mergeable_char(c: char) -> bool {
    !c.is_control() && c != SPACE_MARKER && c != ' '
}

/// Splits `text` into words in marker form: a word starts at each space,
/// which becomes `▁`.
fn split_words(text: &str) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    for c in text.chars() {
        if c == ' ' || words.is_empty() {
            words.push(String::new());
        }
        let w = words.last_mut().expect("pushed above");
        if c == ' ' {
            w.push(SPACE_MARKER);
        } else if is_mergeable_char(c) {
            w.push(c);
        } else {
            // Fallback characters are boundaries for training purposes.
            w.push('\u{0}');
        }
    }
    words
}
