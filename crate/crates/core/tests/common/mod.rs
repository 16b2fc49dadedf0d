//! Shared desk-scale fixtures for integration tests.
#![allow(dead_code)]

use rand::RngCore;

use specdesk::corpus::{Corpus, Record};
use specdesk::distill::{make_prompt, self_distill, DistillJob};
use specdesk::ngram::{pretrain, NGramModel};
use specdesk::synth::{bitext, Pair};
use specdesk::vocab::Vocabulary;

/// Feeds chosen uniforms through the `uniform01` contract: the top 53 bits of
/// `next_u64` scaled by 2^-53.
pub struct Scripted(pub Vec<f64>);

impl RngCore for Scripted {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }
    fn next_u64(&mut self) -> u64 {
        assert!(!self.0.is_empty(), "scripted uniforms exhausted");
        let u = self.0.remove(0);
        ((u * (1u64 << 53) as f64) as u64) << 11
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        dest.fill(0)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        dest.fill(0);
        Ok(())
    }
}

/// Vocabulary covering every synthetic pair plus the instruction text.
pub fn shared_vocab() -> Vocabulary {
    let mut v = Vocabulary::reserved_only();
    for pair in [Pair::DeEn, Pair::FrEn, Pair::RuEn] {
        v.extend_from_text(&bitext(pair, 2000, 99).text());
        let (s, t) = pair.langs();
        v.extend_from_text(&make_prompt((s, t), "").unwrap());
    }
    v
}

/// Formats the sources of `corpus` as translation prompts.
pub fn prompts(corpus: &Corpus) -> Vec<String> {
    specdesk::distill::eval_prompts(corpus, &Default::default()).unwrap()
}

/// Formats a bitext as (instruction prompt, reference completion) records.
pub fn instruct(corpus: &Corpus) -> Corpus {
    let p = prompts(corpus);
    Corpus {
        langs: corpus.langs.clone(),
        headers: Vec::new(),
        records: p
            .into_iter()
            .zip(&corpus.records)
            .map(|(p, r)| Record::new(p, r.completion.clone()))
            .collect(),
    }
}

pub struct DeskSetup {
    pub vocab: Vocabulary,
    /// 4-gram target trained on German and Russian instruction bitext.
    pub target: NGramModel,
    /// 2-gram drafter pretrained on a small mixed-language corpus.
    pub drafter_base: NGramModel,
}

pub const TARGET_K: f64 = 0.05;
pub const DRAFTER_K: f64 = 0.05;

pub fn desk_setup() -> DeskSetup {
    let vocab = shared_vocab();
    let mut train = instruct(&bitext(Pair::DeEn, 3000, 1));
    train.records.extend(instruct(&bitext(Pair::RuEn, 3000, 1)).records);
    let target = pretrain(&train, vocab.clone(), 4, TARGET_K).unwrap();

    let mut general = Corpus::default();
    for pair in [Pair::DeEn, Pair::FrEn, Pair::RuEn] {
        general.records.extend(bitext(pair, 100, 2).records);
    }
    let drafter_base = pretrain(&general, vocab.clone(), 2, DRAFTER_K).unwrap();
    DeskSetup {
        vocab,
        target,
        drafter_base,
    }
}

pub fn distill_pair(target: &NGramModel, pair: Pair, prompts: usize, seed: u64) -> (Corpus, Corpus) {
    let sources = bitext(pair, prompts, seed);
    let job = DistillJob {
        max_len: 96,
        seed,
        ..DistillJob::default()
    };
    (self_distill(target, &sources, &job).unwrap(), sources)
}
