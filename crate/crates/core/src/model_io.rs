//! Versioned text format for [`NGramModel`].
//!
//! ```text
//! version=1
//! order=<n>
//! k=<real>
//! provenance=<text>
//! vocab=<size>
//! <bos>
//! <eos>
//! <unk>
//! <one symbol per line>
//! entries=<count>
//! <context ids...> <token id> <count>
//! ```
//!
//! Count lines are sorted by context then token, and reals are written in
//! shortest round-trip form, so equal models serialize to identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ngram::NGramModel;
use crate::vocab::{TokenId, Vocabulary};

pub const FORMAT_VERSION: u32 = 1;

pub fn to_string(model: &NGramModel) -> Result<String> {
    if model.provenance().contains(['\n', '\r']) {
        return Err(Error::InvalidArgument("provenance contains a newline".into()));
    }
    let mut out = String::new();
    let _ = writeln!(out, "version={FORMAT_VERSION}");
    let _ = writeln!(out, "order={}", model.order());
    let _ = writeln!(out, "k={}", model.k());
    let _ = writeln!(out, "provenance={}", model.provenance());
    let _ = writeln!(out, "vocab={}", model.vocab().len());
    for line in model.vocab().to_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    let entries = model.sorted_entries();
    let _ = writeln!(out, "entries={}", entries.len());
    for (ctx, id, count) in entries {
        for c in ctx {
            let _ = write!(out, "{c} ");
        }
        let _ = writeln!(out, "{id} {count}");
    }
    Ok(out)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok((i + 1, line))
            }
            None => Err(Error::malformed(self.last + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (lineno, line) = self.next(key)?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .map(|v| (lineno, v))
            .ok_or_else(|| Error::malformed(lineno, format!("expected `{key}=`")))
    }
}

fn parse<T: std::str::FromStr>(lineno: usize, s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::malformed(lineno, format!("invalid {what}: {s:?}")))
}

pub fn from_str(text: &str) -> Result<NGramModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (_, version) = lines.field("version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::VersionMismatch {
            found: version.to_string(),
            expected: FORMAT_VERSION,
        });
    }
    let (ln, order) = lines.field("order")?;
    let order: usize = parse(ln, order, "order")?;
    let (ln, k) = lines.field("k")?;
    let k: f64 = parse(ln, k, "k")?;
    let (_, provenance) = lines.field("provenance")?;
    let (ln, vocab_len) = lines.field("vocab")?;
    let vocab_len: usize = parse(ln, vocab_len, "vocab size")?;

    let first = ln + 1;
    let mut vocab_lines = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        vocab_lines.push(lines.next("vocabulary entry")?.1);
    }
    let vocab = Vocabulary::from_lines(vocab_lines, first)?;

    let mut model = NGramModel::empty(vocab, order, k)
        .map_err(|e| Error::malformed(ln, e.to_string()))?;
    model.set_provenance(provenance);

    let (ln, entries) = lines.field("entries")?;
    let entries: usize = parse(ln, entries, "entry count")?;
    let n = model.context_len();
    let size = model.vocab().len();
    let mut ids: Vec<TokenId> = Vec::with_capacity(n + 1);
    for _ in 0..entries {
        let (ln, line) = lines.next("count entry")?;
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != n + 2 {
            return Err(Error::malformed(ln, format!("expected {} fields", n + 2)));
        }
        ids.clear();
        for f in &fields[..=n] {
            let id: TokenId = parse(ln, f, "token id")?;
            if id as usize >= size {
                return Err(Error::malformed(ln, format!("token id {id} out of range")));
            }
            ids.push(id);
        }
        let count: f64 = parse(ln, fields[n + 1], "count")?;
        if !(count.is_finite() && count >= 0.0) {
            return Err(Error::malformed(ln, format!("invalid count {count}")));
        }
        model.insert_count(&ids[..n], ids[n], count);
    }
    if let Some((i, _)) = lines.inner.find(|(_, l)| !l.is_empty()) {
        return Err(Error::malformed(i + 1, "trailing data after count entries"));
    }
    model.retotal_all();
    Ok(model)
}

pub fn save_model(model: &NGramModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_string(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NGramModel> {
    from_str(&fs::read_to_string(path)?)
}
