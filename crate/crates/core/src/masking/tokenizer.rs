//! Subword tokenizers behind a small interface.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("cannot tokenize empty word")]
    EmptyWord,
    #[error("no subword segmentation for {word:?} and the vocabulary has no unknown token")]
    Unsegmentable { word: String },
    #[error("vocabulary: {0}")]
    Vocabulary(String),
}

/// Maps one word to one or more subword ids, deterministically.
pub trait SubwordTokenizer: Send + Sync {
    fn tokenize_word(&self, word: &str, out: &mut Vec<u32>) -> Result<(), TokenizeError>;

    fn vocab_size(&self) -> u32;

    fn mask_id(&self) -> u32;

    /// Ids that must never be drawn as random replacements, sorted.
    fn special_ids(&self) -> &[u32];

    /// Surface form of an id, for inspection output.
    fn token_text(&self, id: u32) -> Option<String>;
}

pub const TOY_VOCAB_SIZE: u32 = 4096;
pub const TOY_PAD_ID: u32 = 0;
pub const TOY_UNK_ID: u32 = 1;
pub const TOY_MASK_ID: u32 = 2;
const TOY_SPECIALS: [u32; 3] = [TOY_PAD_ID, TOY_UNK_ID, TOY_MASK_ID];

/// Test tokenizer: splits a word into consecutive character pairs and hashes
/// each pair (FNV-1a) into a fixed 4096-entry vocabulary.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyTokenizer;

impl ToyTokenizer {
    fn pair_id(pair: &str) -> u32 {
        let mut h: u32 = 0x811c_9dc5;
        for b in pair.bytes() {
            h ^= u32::from(b);
            h = h.wrapping_mul(0x0100_0193);
        }
        TOY_SPECIALS.len() as u32 + h % (TOY_VOCAB_SIZE - TOY_SPECIALS.len() as u32)
    }
}

impl SubwordTokenizer for ToyTokenizer {
    fn tokenize_word(&self, word: &str, out: &mut Vec<u32>) -> Result<(), TokenizeError> {
        if word.is_empty() {
            return Err(TokenizeError::EmptyWord);
        }
        let mut iter = word.char_indices().map(|(i, _)| i).step_by(2).peekable();
        while let Some(start) = iter.next() {
            let end = iter.peek().copied().unwrap_or(word.len());
            out.push(Self::pair_id(&word[start..end]));
        }
        Ok(())
    }

    fn vocab_size(&self) -> u32 {
        TOY_VOCAB_SIZE
    }

    fn mask_id(&self) -> u32 {
        TOY_MASK_ID
    }

    fn special_ids(&self) -> &[u32] {
        &TOY_SPECIALS
    }

    fn token_text(&self, id: u32) -> Option<String> {
        match id {
            TOY_PAD_ID => Some("[PAD]".into()),
            TOY_UNK_ID => Some("[UNK]".into()),
            TOY_MASK_ID => Some("[MASK]".into()),
            _ => None,
        }
    }
}

const CONTINUATION: &str = "##";
const MAX_WORD_CHARS: usize = 100;

/// Greedy longest-match-first WordPiece over a vocabulary file with one token
/// per line (line number = id). Continuation pieces carry a `##` prefix.
/// Tokens written as `[NAME]` or `<name>` are special; one of `[MASK]` or
/// `<mask>` is required, and `[UNK]`/`<unk>` is used for unsegmentable words
/// when present.
#[derive(Debug, Clone)]
pub struct VocabTokenizer {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    mask: u32,
    unk: Option<u32>,
    specials: Vec<u32>,
    max_piece_len: usize,
}

impl VocabTokenizer {
    pub fn from_vocab_text(text: &str) -> Result<Self, TokenizeError> {
        let tokens: Vec<String> = text.lines().map(|l| l.trim_end_matches('\r').to_owned()).collect();
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() {
                return Err(TokenizeError::Vocabulary(format!("empty token on line {}", i + 1)));
            }
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(TokenizeError::Vocabulary(format!("duplicate token {t:?}")));
            }
        }
        let find = |names: &[&str]| names.iter().find_map(|n| ids.get(*n).copied());
        let mask =
            find(&["[MASK]", "<mask>"]).ok_or_else(|| TokenizeError::Vocabulary("no [MASK] or <mask> token".into()))?;
        let unk = find(&["[UNK]", "<unk>"]);
        let specials = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| is_special(t))
            .map(|(i, _)| i as u32)
            .collect();
        let max_piece_len = tokens
            .iter()
            .map(|t| t.trim_start_matches(CONTINUATION).len())
            .max()
            .unwrap_or(0);
        Ok(Self {
            tokens,
            ids,
            mask,
            unk,
            specials,
            max_piece_len,
        })
    }
}

fn is_special(token: &str) -> bool {
    let wrapped = |open: char, close: char| {
        token.len() > 2 && token.starts_with(open) && token.ends_with(close) && !token[1..token.len() - 1].contains(' ')
    };
    wrapped('[', ']') || wrapped('<', '>')
}

impl SubwordTokenizer for VocabTokenizer {
    fn tokenize_word(&self, word: &str, out: &mut Vec<u32>) -> Result<(), TokenizeError> {
        if word.is_empty() {
            return Err(TokenizeError::EmptyWord);
        }
        let unknown = |out: &mut Vec<u32>| match self.unk {
            Some(id) => {
                out.push(id);
                Ok(())
            }
            None => Err(TokenizeError::Unsegmentable { word: word.to_owned() }),
        };
        if word.chars().count() > MAX_WORD_CHARS {
            return unknown(out);
        }
        let mark = out.len();
        let mut start = 0;
        let mut piece = String::new();
        while start < word.len() {
            let mut end = word.len().min(start + self.max_piece_len);
            while !word.is_char_boundary(end) {
                end -= 1;
            }
            let mut found = None;
            while end > start {
                piece.clear();
                if start > 0 {
                    piece.push_str(CONTINUATION);
                }
                piece.push_str(&word[start..end]);
                if let Some(&id) = self.ids.get(&piece) {
                    found = Some((id, end));
                    break;
                }
                end -= 1;
                while !word.is_char_boundary(end) {
                    end -= 1;
                }
            }
            match found {
                Some((id, end)) => {
                    out.push(id);
                    start = end;
                }
                None => {
                    out.truncate(mark);
                    return unknown(out);
                }
            }
        }
        Ok(())
    }

    fn vocab_size(&self) -> u32 {
        self.tokens.len() as u32
    }

    fn mask_id(&self) -> u32 {
        self.mask
    }

    fn special_ids(&self) -> &[u32] {
        &self.specials
    }

    fn token_text(&self, id: u32) -> Option<String> {
        self.tokens.get(id as usize).cloned()
    }
}
