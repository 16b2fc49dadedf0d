//! Prompt/completion corpora and their TSV file format.
//!
//! ```text
//! #langs=de,en
//! #distilled-from=pretrained
//! source text<TAB>target text
//! ```
//!
//! Header lines start with `#` and carry `key=value` pairs. Fields are stored
//! verbatim, so they may not contain tabs or newlines.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub prompt: String,
    pub completion: String,
}

impl Record {
    pub fn new(prompt: impl Into<String>, completion: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            completion: completion.into(),
        }
    }

    /// Tokens contributed to a training stream: every symbol plus the EOS.
    pub fn token_count(&self) -> usize {
        self.prompt.chars().count() + self.completion.chars().count() + 1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub langs: Option<(String, String)>,
    /// Extra header lines other than `langs`, in file order.
    pub headers: Vec<(String, String)>,
    pub records: Vec<Record>,
}

impl Corpus {
    pub fn new(langs: Option<(&str, &str)>, records: Vec<Record>) -> Self {
        Self {
            langs: langs.map(|(s, t)| (s.to_string(), t.to_string())),
            headers: Vec::new(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn header(&self, key: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn token_count(&self) -> usize {
        self.records.iter().map(Record::token_count).sum()
    }

    /// All prompt and completion text, for vocabulary building.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.prompt);
            out.push_str(&r.completion);
        }
        out
    }

    /// The first `budget` tokens of the corpus. Whole records are kept while
    /// they fit; the record that crosses the budget is cut inside its
    /// completion (or prompt) so the result has exactly
    /// `min(budget, token_count())` tokens.
    pub fn truncate_tokens(&self, budget: usize) -> Corpus {
        let mut out = Corpus {
            langs: self.langs.clone(),
            headers: self.headers.clone(),
            records: Vec::new(),
        };
        let mut left = budget;
        for r in &self.records {
            if left == 0 {
                break;
            }
            let n = r.token_count();
            if n <= left {
                out.records.push(r.clone());
                left -= n;
                continue;
            }
            // The EOS takes one slot; the rest is filled with leading symbols.
            let keep = left - 1;
            let prompt_len = r.prompt.chars().count();
            let record = if keep <= prompt_len {
                Record::new(r.prompt.chars().take(keep).collect::<String>(), "")
            } else {
                Record::new(
                    r.prompt.clone(),
                    r.completion.chars().take(keep - prompt_len).collect::<String>(),
                )
            };
            out.records.push(record);
            break;
        }
        out
    }

    pub fn to_tsv(&self) -> Result<String> {
        let mut out = String::new();
        if let Some((s, t)) = &self.langs {
            out.push_str(&format!("#langs={s},{t}\n"));
        }
        for (k, v) in &self.headers {
            out.push_str(&format!("#{k}={v}\n"));
        }
        for r in &self.records {
            for field in [&r.prompt, &r.completion] {
                if field.contains(['\t', '\n', '\r']) {
                    return Err(Error::InvalidArgument(format!(
                        "corpus field contains a tab or newline: {field:?}"
                    )));
                }
            }
            out.push_str(&r.prompt);
            out.push('\t');
            out.push_str(&r.completion);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut corpus = Corpus::default();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(header) = line.strip_prefix('#') {
                let (k, v) = header
                    .split_once('=')
                    .ok_or_else(|| Error::malformed(lineno, "header without `=`"))?;
                if k == "langs" {
                    let (s, t) = v
                        .split_once(',')
                        .ok_or_else(|| Error::malformed(lineno, "langs must be `src,tgt`"))?;
                    corpus.langs = Some((s.trim().to_string(), t.trim().to_string()));
                } else {
                    corpus.headers.push((k.to_string(), v.to_string()));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (prompt, completion) = line
                .split_once('\t')
                .ok_or_else(|| Error::malformed(lineno, "expected `source<TAB>target`"))?;
            if completion.contains('\t') {
                return Err(Error::malformed(lineno, "more than two fields"));
            }
            corpus.records.push(Record::new(prompt, completion));
        }
        Ok(corpus)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_tsv()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tsv(&fs::read_to_string(path)?)
    }
}
