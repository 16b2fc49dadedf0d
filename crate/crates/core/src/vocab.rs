//! Character-level vocabulary.
//!
//! Ids 0, 1 and 2 are reserved for `<bos>`, `<eos>` and `<unk>`. Every other
//! id maps to exactly one Unicode scalar value, assigned in order of first
//! appearance so that building from the same text always yields the same ids.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub type TokenId = u32;

pub const BOS: TokenId = 0;
pub const EOS: TokenId = 1;
pub const UNK: TokenId = 2;

const RESERVED: [&str; 3] = ["<bos>", "<eos>", "<unk>"];
const NUM_RESERVED: usize = RESERVED.len();

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    chars: Vec<char>,
    index: HashMap<char, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::reserved_only()
    }
}

impl Vocabulary {
    pub fn reserved_only() -> Self {
        Self {
            chars: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Builds a vocabulary from an ordered list of symbols. Duplicates are
    /// rejected because they would break the id/symbol bijection.
    pub fn from_chars(chars: impl IntoIterator<Item = char>) -> Result<Self> {
        let mut vocab = Self::reserved_only();
        for c in chars {
            if !vocab.push(c) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate vocabulary symbol {c:?}"
                )));
            }
        }
        Ok(vocab)
    }

    fn push(&mut self, c: char) -> bool {
        if self.index.contains_key(&c) {
            return false;
        }
        let id = (self.chars.len() + NUM_RESERVED) as TokenId;
        self.chars.push(c);
        self.index.insert(c, id);
        true
    }

    pub fn len(&self) -> usize {
        self.chars.len() + NUM_RESERVED
    }

    /// Always false: the reserved tokens are present in every vocabulary.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lookup(&self, c: char) -> Option<TokenId> {
        self.index.get(&c).copied()
    }

    pub fn is_reserved(id: TokenId) -> bool {
        (id as usize) < NUM_RESERVED
    }

    /// The symbol for a non-reserved id.
    pub fn char_at(&self, id: TokenId) -> Option<char> {
        (id as usize)
            .checked_sub(NUM_RESERVED)
            .and_then(|i| self.chars.get(i).copied())
    }

    /// Printable form of any valid id, reserved ids included.
    pub fn token_at(&self, id: TokenId) -> Option<String> {
        match id as usize {
            i if i < NUM_RESERVED => Some(RESERVED[i].to_string()),
            _ => self.char_at(id).map(String::from),
        }
    }

    pub fn symbols(&self) -> &[char] {
        &self.chars
    }

    /// Extends the vocabulary with every new scalar value in `text`.
    pub fn extend_from_text(&mut self, text: &str) {
        for c in text.chars() {
            self.push(c);
        }
    }

    pub fn check_id(&self, id: TokenId) -> Result<()> {
        if (id as usize) < self.len() {
            Ok(())
        } else {
            Err(Error::CorruptSequence {
                id,
                size: self.len(),
            })
        }
    }

    /// Writes the vocabulary as text lines: the three reserved markers
    /// followed by one (escaped) symbol per line, so that line index = id.
    pub fn to_lines(&self) -> Vec<String> {
        RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(self.chars.iter().map(|&c| escape_symbol(c)))
            .collect()
    }

    /// Parses the output of [`Vocabulary::to_lines`]. `first_line` is the
    /// 1-based line number of `lines[0]` in the enclosing file, used in
    /// error messages.
    pub fn from_lines<'a>(
        lines: impl IntoIterator<Item = &'a str>,
        first_line: usize,
    ) -> Result<Self> {
        let mut vocab = Self::reserved_only();
        let mut seen = 0usize;
        for (i, line) in lines.into_iter().enumerate() {
            let lineno = first_line + i;
            seen += 1;
            if i < NUM_RESERVED {
                if line != RESERVED[i] {
                    return Err(Error::malformed(
                        lineno,
                        format!("expected reserved token {}", RESERVED[i]),
                    ));
                }
                continue;
            }
            let c = unescape_symbol(line)
                .ok_or_else(|| Error::malformed(lineno, "expected a single symbol"))?;
            if !vocab.push(c) {
                return Err(Error::malformed(lineno, format!("duplicate symbol {c:?}")));
            }
        }
        if seen < NUM_RESERVED {
            return Err(Error::malformed(
                first_line + seen,
                "missing reserved header",
            ));
        }
        Ok(vocab)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = self.to_lines().join("\n");
        out.push('\n');
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_lines(text.lines(), 1)
    }
}

fn escape_symbol(c: char) -> String {
    match c {
        '\\' => "\\\\".into(),
        '\n' => "\\n".into(),
        '\t' => "\\t".into(),
        '\r' => "\\r".into(),
        c => c.to_string(),
    }
}

fn unescape_symbol(s: &str) -> Option<char> {
    let mut it = s.chars();
    let c = match it.next()? {
        '\\' => match it.next()? {
            '\\' => '\\',
            'n' => '\n',
            't' => '\t',
            'r' => '\r',
            _ => return None,
        },
        c => c,
    };
    it.next().is_none().then_some(c)
}

/// Builds a vocabulary from the scalar values of `corpus` in first-appearance
/// order. An empty corpus yields the three reserved tokens only.
pub fn build_vocab(corpus: &str) -> Vocabulary {
    let mut vocab = Vocabulary::reserved_only();
    vocab.extend_from_text(corpus);
    vocab
}

/// Maps each scalar value to its id; unknown symbols become [`UNK`]. No
/// BOS/EOS markers are added.
pub fn encode(text: &str, vocab: &Vocabulary) -> Vec<TokenId> {
    text.chars()
        .map(|c| vocab.lookup(c).unwrap_or(UNK))
        .collect()
}

/// Inverse of [`encode`]; reserved ids render as nothing.
pub fn decode_tokens(seq: &[TokenId], vocab: &Vocabulary) -> Result<String> {
    let mut out = String::with_capacity(seq.len());
    for &id in seq {
        vocab.check_id(id)?;
        if let Some(c) = vocab.char_at(id) {
            out.push(c);
        }
    }
    Ok(out)
}
