//! Self-distillation: drafter training data generated by the target itself.

use rayon::prelude::*;

use crate::corpus::{Corpus, Record};
use crate::error::{Error, Result};
use crate::ngram::{generate_with, NGramModel};
use crate::rng::{check_temperature, derive_seed, stream_rng, DRAFT_STREAM};
use crate::vocab::{decode_tokens, encode};

pub const DEFAULT_TEMPERATURES: [f64; 4] = [0.0, 0.3, 0.7, 1.0];

pub fn language_name(tag: &str) -> Result<&'static str> {
    Ok(match tag {
        "de" => "German",
        "fr" => "French",
        "ru" => "Russian",
        "ja" => "Japanese",
        "zh" => "Chinese",
        "en" => "English",
        other => return Err(Error::UnknownLanguage(other.to_string())),
    })
}

/// Wraps the task instruction, e.g. in a chat template. Every `{}` in the
/// template is replaced by the instruction; the default is the bare
/// instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate(pub String);

impl Default for PromptTemplate {
    fn default() -> Self {
        Self("{}".into())
    }
}

impl PromptTemplate {
    pub fn apply(&self, instruction: &str) -> String {
        self.0.replace("{}", instruction)
    }
}

/// `Translate <Source> to <Target>: <source_text>`.
pub fn make_prompt(task: (&str, &str), source_text: &str) -> Result<String> {
    make_prompt_with(&PromptTemplate::default(), task, source_text)
}

pub fn make_prompt_with(
    template: &PromptTemplate,
    (src, tgt): (&str, &str),
    source_text: &str,
) -> Result<String> {
    let instruction = format!(
        "Translate {} to {}: {source_text}",
        language_name(src)?,
        language_name(tgt)?
    );
    Ok(template.apply(&instruction))
}

/// Decoding prompts for the records of `corpus`: the translation
/// instruction when the corpus declares its languages, the raw source text
/// otherwise.
pub fn eval_prompts(corpus: &Corpus, template: &PromptTemplate) -> Result<Vec<String>> {
    corpus
        .records
        .iter()
        .map(|r| match &corpus.langs {
            Some((s, t)) => make_prompt_with(template, (s, t), &r.prompt),
            None => Ok(r.prompt.clone()),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillJob {
    pub temperatures: Vec<f64>,
    /// Samples per non-zero temperature; greedy decoding always yields one.
    pub samples_per_temperature: usize,
    pub max_len: usize,
    pub seed: u64,
    pub template: PromptTemplate,
}

impl Default for DistillJob {
    fn default() -> Self {
        Self {
            temperatures: DEFAULT_TEMPERATURES.to_vec(),
            samples_per_temperature: 1,
            max_len: 128,
            seed: 0,
            template: PromptTemplate::default(),
        }
    }
}

impl DistillJob {
    /// The schedule with repeated temperatures removed, first occurrence kept.
    pub fn schedule(&self) -> Result<Vec<f64>> {
        if self.temperatures.is_empty() {
            return Err(Error::InvalidArgument("temperature schedule is empty".into()));
        }
        let mut out: Vec<f64> = Vec::new();
        for &t in &self.temperatures {
            check_temperature(t)?;
            if !out.contains(&t) {
                out.push(t);
            }
        }
        Ok(out)
    }

    pub fn samples_at(&self, t: f64) -> usize {
        if t == 0.0 {
            1
        } else {
            self.samples_per_temperature
        }
    }
}

/// Generates one completion per (prompt, temperature, sample) with the
/// target. Output order is prompt-major, then temperature, then sample; each
/// generation gets its own seed derived from those three indices, so the
/// result does not depend on how the work is scheduled.
pub fn self_distill(target: &NGramModel, prompts: &Corpus, job: &DistillJob) -> Result<Corpus> {
    let schedule = job.schedule()?;
    if job.samples_per_temperature < 1 || job.max_len < 1 {
        return Err(Error::InvalidArgument(
            "samples_per_temperature and max_len must be >= 1".into(),
        ));
    }
    let instructions = match &prompts.langs {
        Some(_) => eval_prompts(prompts, &job.template)?,
        None => prompts.records.iter().map(|r| job.template.apply(&r.prompt)).collect(),
    };
    let vocab = target.vocab();
    let per_prompt: Vec<Vec<Record>> = instructions
        .par_iter()
        .enumerate()
        .map(|(pi, prompt)| {
            let ids = encode(prompt, vocab);
            let mut records = Vec::new();
            for (ti, &t) in schedule.iter().enumerate() {
                for si in 0..job.samples_at(t) {
                    let seed = derive_seed(job.seed, &[pi as u64, ti as u64, si as u64]);
                    let mut rng = stream_rng(seed, DRAFT_STREAM);
                    let out = generate_with(target, &ids, t, job.max_len, &mut rng)?;
                    records.push(Record::new(prompt.clone(), decode_tokens(&out, vocab)?));
                }
            }
            Ok(records)
        })
        .collect::<Result<_>>()?;

    Ok(Corpus {
        langs: prompts.langs.clone(),
        headers: vec![
            ("distilled-from".into(), target.provenance().to_string()),
            (
                "temps".into(),
                schedule.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join(","),
            ),
        ],
        records: per_prompt.into_iter().flatten().collect(),
    })
}
