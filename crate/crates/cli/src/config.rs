//! Line-oriented `key = value` files with `[section]` headers.
//!
//! ```text
//! # comment
//! target = models/target.model
//! [drafters]
//! de-en = models/de.model
//! ```
//!
//! Keys before the first header belong to the unnamed top section. Order of
//! sections and keys is preserved.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use specdesk::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub sections: Vec<Section>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl ConfigFile {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut sections = vec![Section::default()];
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::malformed(lineno, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::malformed(lineno, "empty section name"));
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(Error::malformed(lineno, format!("duplicate section [{name}]")));
                }
                sections.push(Section {
                    name: name.to_string(),
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::malformed(lineno, "expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::malformed(lineno, "empty key"));
            }
            let section = sections.last_mut().expect("top section");
            if section.entries.iter().any(|(k, _, _)| k == key) {
                return Err(Error::malformed(lineno, format!("duplicate key `{key}`")));
            }
            section.entries.push((key.to_string(), value.trim().to_string(), lineno));
        }
        Ok(Self {
            sections,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn top(&self) -> &Section {
        &self.sections[0]
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map_or(0, |(_, _, l)| *l)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| {
            let name = if self.name.is_empty() { "top level" } else { &self.name };
            Error::InvalidArgument(format!("config is missing `{key}` in {name}"))
        })
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::malformed(self.line_of(key), format!("invalid value for `{key}`: {v:?}"))),
        }
    }

    /// Comma separated list.
    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_list(v).map_err(|_| {
                Error::malformed(self.line_of(key), format!("invalid list for `{key}`: {v:?}"))
            }),
        }
    }
}

pub fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, T::Err> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# grid
target = models/t.model
k = 5
temperatures = 0.0, 1.0

[drafters]
de-en = a.model
ru-en = /abs/b.model
";

    #[test]
    fn sections_and_values() {
        let c = ConfigFile::parse(SAMPLE, "/base").unwrap();
        assert_eq!(c.top().get("target"), Some("models/t.model"));
        assert_eq!(c.top().parse_or("k", 1usize).unwrap(), 5);
        assert_eq!(c.top().parse_or("missing", 7usize).unwrap(), 7);
        assert_eq!(c.top().list_or::<f64>("temperatures", vec![]).unwrap(), [0.0, 1.0]);
        let d = c.section("drafters").unwrap();
        assert_eq!(d.entries.len(), 2);
        assert_eq!(c.resolve(d.get("de-en").unwrap()), PathBuf::from("/base/a.model"));
        assert_eq!(c.resolve(d.get("ru-en").unwrap()), PathBuf::from("/abs/b.model"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            ConfigFile::parse("a = 1\nnot a pair\n", "."),
            Err(Error::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            ConfigFile::parse("a = 1\na = 2\n", "."),
            Err(Error::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            ConfigFile::parse("[x\n", "."),
            Err(Error::Malformed { line: 1, .. })
        ));
        let c = ConfigFile::parse("\n\nk = five\n", ".").unwrap();
        assert!(matches!(
            c.top().parse_or("k", 1usize),
            Err(Error::Malformed { line: 3, .. })
        ));
        assert!(matches!(c.top().require("target"), Err(Error::InvalidArgument(_))));
    }
}
