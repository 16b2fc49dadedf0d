//! Heuristic drafter selection from the script of the input text.
//!
//! Every alphabetic character votes for a script (or directly for a language
//! when it falls in a configured range hint). The majority script decides:
//! Cyrillic is Russian, kana anywhere in CJK text is Japanese and Han alone
//! is Chinese. Latin text is split between German and French first by their
//! marker letters and, when there are none, by cosine similarity of letter
//! frequencies against reference profiles.

use std::path::{Path, PathBuf};

use specdesk::{Error, Result};

use crate::config::ConfigFile;

/// Language-pair tags mapped to drafter model files.
#[derive(Debug, Clone, PartialEq)]
pub struct DrafterRegistry {
    pub entries: Vec<(String, PathBuf)>,
    pub default_tag: Option<String>,
    /// Extra `(language, first, last)` code point ranges.
    pub ranges: Vec<(String, char, char)>,
}

fn parse_range(lineno: usize, spec: &str) -> Result<(char, char)> {
    let bad = || Error::malformed(lineno, format!("invalid code point range {spec:?}"));
    let (a, b) = spec.split_once('-').unwrap_or((spec, spec));
    let cp = |s: &str| {
        let s = s.trim().trim_start_matches("U+").trim_start_matches("0x");
        u32::from_str_radix(s, 16).ok().and_then(char::from_u32)
    };
    match (cp(a), cp(b)) {
        (Some(lo), Some(hi)) if lo <= hi => Ok((lo, hi)),
        _ => Err(bad()),
    }
}

impl DrafterRegistry {
    pub fn from_config(cfg: &ConfigFile) -> Result<Self> {
        let drafters = cfg
            .section("drafters")
            .ok_or_else(|| Error::InvalidArgument("registry has no [drafters] section".into()))?;
        let mut entries = Vec::new();
        for (tag, path, _) in &drafters.entries {
            let path = cfg.resolve(path);
            if !path.is_file() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("drafter {tag}: {} does not exist", path.display()),
                )));
            }
            entries.push((tag.clone(), path));
        }
        let default_tag = cfg.top().get("default").map(str::to_string);
        if let Some(tag) = &default_tag {
            if !entries.iter().any(|(t, _)| t == tag) {
                return Err(Error::InvalidArgument(format!("default tag {tag} is not registered")));
            }
        }
        let mut ranges = Vec::new();
        if let Some(section) = cfg.section("ranges") {
            for (lang, specs, lineno) in &section.entries {
                for spec in specs.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (lo, hi) = parse_range(*lineno, spec)?;
                    ranges.push((lang.clone(), lo, hi));
                }
            }
        }
        Ok(Self {
            entries,
            default_tag,
            ranges,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config(&ConfigFile::load(path)?)
    }

    /// First registered tag whose source side is `lang`.
    pub fn tag_for(&self, lang: &str) -> Option<&str> {
        self.entries
            .iter()
            .map(|(t, _)| t.as_str())
            .find(|t| t.split('-').next() == Some(lang))
    }

    pub fn path_of(&self, tag: &str) -> Option<&Path> {
        self.entries.iter().find(|(t, _)| t == tag).map(|(_, p)| p.as_path())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Script {
    Latin,
    Cyrillic,
    Kana,
    Han,
}

fn script_of(c: char) -> Option<Script> {
    match c {
        'a'..='z' | 'A'..='Z' | '\u{00C0}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}' => Some(Script::Latin),
        '\u{0400}'..='\u{052F}' => Some(Script::Cyrillic),
        '\u{3040}'..='\u{30FF}' | '\u{31F0}'..='\u{31FF}' | '\u{FF66}'..='\u{FF9F}' => Some(Script::Kana),
        '\u{4E00}'..='\u{9FFF}' | '\u{3400}'..='\u{4DBF}' | '\u{F900}'..='\u{FAFF}' => Some(Script::Han),
        _ => None,
    }
}

const DE_MARKERS: &[char] = &['ä', 'ö', 'ü', 'ß'];
const FR_MARKERS: &[char] = &['é', 'è', 'ê', 'ë', 'ç', 'à', 'â', 'î', 'ï', 'ô', 'û', 'ù', 'œ'];

/// Letter frequencies a..z in percent.
const DE_PROFILE: [f64; 26] = [
    6.516, 1.886, 2.732, 5.076, 16.396, 1.656, 3.009, 4.577, 6.550, 0.268, 1.417, 3.437, 2.534,
    9.776, 2.594, 0.670, 0.018, 7.003, 7.270, 6.154, 4.166, 0.846, 1.921, 0.034, 0.039, 1.134,
];
const FR_PROFILE: [f64; 26] = [
    7.636, 0.901, 3.260, 3.669, 14.715, 1.066, 0.866, 0.737, 7.529, 0.613, 0.074, 5.456, 2.968,
    7.095, 5.796, 2.521, 1.362, 6.693, 7.948, 7.244, 6.311, 1.838, 0.049, 0.427, 0.128, 0.326,
];

fn cosine(a: &[f64; 26], b: &[f64; 26]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn latin_language(text: &str) -> Option<&'static str> {
    let lower = text.to_lowercase();
    let de = lower.chars().filter(|c| DE_MARKERS.contains(c)).count();
    let fr = lower.chars().filter(|c| FR_MARKERS.contains(c)).count();
    if de != fr {
        return Some(if de > fr { "de" } else { "fr" });
    }
    let mut counts = [0.0; 26];
    for c in lower.chars().filter(char::is_ascii_lowercase) {
        counts[(c as u8 - b'a') as usize] += 1.0;
    }
    let (sd, sf) = (cosine(&counts, &DE_PROFILE), cosine(&counts, &FR_PROFILE));
    if sd > sf {
        Some("de")
    } else if sf > sd {
        Some("fr")
    } else {
        None
    }
}

/// Source language of `text`, or `None` when no rule fires.
pub fn detect_language(text: &str, ranges: &[(String, char, char)]) -> Option<String> {
    // Votes: range hints in registry order, then Latin, Cyrillic, CJK.
    let mut hinted: Vec<(&str, usize)> = Vec::new();
    let (mut latin, mut cyrillic, mut kana, mut han) = (0, 0, 0, 0);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        if let Some((lang, _, _)) = ranges.iter().find(|(_, lo, hi)| (*lo..=*hi).contains(&c)) {
            match hinted.iter_mut().find(|(l, _)| l == lang) {
                Some((_, n)) => *n += 1,
                None => hinted.push((lang, 1)),
            }
            continue;
        }
        match script_of(c) {
            Some(Script::Latin) => latin += 1,
            Some(Script::Cyrillic) => cyrillic += 1,
            Some(Script::Kana) => kana += 1,
            Some(Script::Han) => han += 1,
            None => {}
        }
    }
    let mut best: Option<(String, usize)> = None;
    let mut consider = |label: String, n: usize| {
        if n > 0 && best.as_ref().is_none_or(|(_, m)| n > *m) {
            best = Some((label, n));
        }
    };
    for (lang, n) in &hinted {
        consider(format!("={lang}"), *n);
    }
    consider("latin".into(), latin);
    consider("cyrillic".into(), cyrillic);
    consider("cjk".into(), kana + han);
    let (label, _) = best?;
    match label.as_str() {
        "latin" => latin_language(text).map(str::to_string),
        "cyrillic" => Some("ru".into()),
        "cjk" => Some(if kana > 0 { "ja" } else { "zh" }.into()),
        hint => Some(hint[1..].to_string()),
    }
}

/// The registry tag whose source language matches `text`, else the default.
pub fn select_drafter(text: &str, registry: &DrafterRegistry) -> Result<String> {
    if registry.entries.is_empty() {
        return Err(Error::InvalidArgument("drafter registry is empty".into()));
    }
    let detected = detect_language(text, &registry.ranges);
    if let Some(tag) = detected.as_deref().and_then(|l| registry.tag_for(l)) {
        return Ok(tag.to_string());
    }
    registry.default_tag.clone().ok_or_else(|| {
        Error::UnknownLanguage(match detected {
            Some(l) => format!("no drafter registered for {l} and no default"),
            None => "could not identify the input language and no default is set".into(),
        })
    })
}
