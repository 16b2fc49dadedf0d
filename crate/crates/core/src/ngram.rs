//! Add-k smoothed n-gram models.
//!
//! The same type serves as target and as drafter; decoding only ever asks a
//! model for [`NGramModel::next_dist`]. Counts are real-valued so that
//! finetuning with a weight stays an exact sum of counts.

use std::collections::{BTreeMap, HashMap};

use rand::RngCore;

use crate::corpus::Corpus;
use crate::dist::{apply_temperature, argmax, sample, Distribution};
use crate::error::{Error, Result};
use crate::rng::{check_temperature, SamplerConfig, SessionRng};
use crate::vocab::{encode, TokenId, Vocabulary, BOS, EOS};

pub const DEFAULT_TARGET_ORDER: usize = 4;
pub const DEFAULT_DRAFTER_ORDER: usize = 2;

/// Successor counts of one context.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextCounts {
    next: BTreeMap<TokenId, f64>,
    total: f64,
}

impl ContextCounts {
    pub fn get(&self, id: TokenId) -> f64 {
        self.next.get(&id).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, f64)> + '_ {
        self.next.iter().map(|(&id, &c)| (id, c))
    }

    fn add(&mut self, id: TokenId, amount: f64) {
        *self.next.entry(id).or_insert(0.0) += amount;
    }

    fn retotal(&mut self) {
        self.total = self.next.values().sum();
    }
}

type CountTable = HashMap<Box<[TokenId]>, ContextCounts>;

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    k: f64,
    vocab: Vocabulary,
    provenance: String,
    counts: CountTable,
}

impl NGramModel {
    /// An untrained model. Every context gets the uniform distribution.
    pub fn empty(vocab: Vocabulary, order: usize, k: f64) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidArgument("order must be >= 1".into()));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidArgument(format!("smoothing k must be > 0, got {k}")));
        }
        Ok(Self {
            order,
            k,
            vocab,
            provenance: "empty".into(),
            counts: CountTable::new(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn set_provenance(&mut self, provenance: impl Into<String>) {
        self.provenance = provenance.into();
    }

    pub fn context_len(&self) -> usize {
        self.order - 1
    }

    pub fn counts(&self, context: &[TokenId]) -> Option<&ContextCounts> {
        self.counts.get(context)
    }

    pub fn num_contexts(&self) -> usize {
        self.counts.len()
    }

    /// All `(context, token, count)` triples in lexicographic order.
    pub fn sorted_entries(&self) -> Vec<(&[TokenId], TokenId, f64)> {
        let mut contexts: Vec<&Box<[TokenId]>> = self.counts.keys().collect();
        contexts.sort();
        contexts
            .into_iter()
            .flat_map(|ctx| {
                self.counts[ctx]
                    .iter()
                    .map(move |(id, c)| (&ctx[..], id, c))
            })
            .collect()
    }

    /// Inserts a raw count; used when loading a saved model.
    pub(crate) fn insert_count(&mut self, context: &[TokenId], id: TokenId, count: f64) {
        self.counts
            .entry(context.into())
            .or_default()
            .add(id, count);
    }

    pub(crate) fn retotal_all(&mut self) {
        self.counts.values_mut().for_each(ContextCounts::retotal);
    }

    /// The last `order - 1` ids of `context`, left-padded with BOS.
    pub fn context_key(&self, context: &[TokenId]) -> Vec<TokenId> {
        let n = self.context_len();
        let tail = &context[context.len().saturating_sub(n)..];
        let mut key = vec![BOS; n - tail.len()];
        key.extend_from_slice(tail);
        key
    }

    /// `P(x | ctx) = (count(ctx, x) + k) / (total(ctx) + k * |V|)`.
    pub fn next_dist(&self, context: &[TokenId]) -> Distribution {
        let v = self.vocab.len();
        let key = self.context_key(context);
        let Some(row) = self.counts.get(&key[..]) else {
            return Distribution::uniform(v);
        };
        let denom = row.total + self.k * v as f64;
        let mut probs = vec![self.k / denom; v];
        for (id, c) in row.iter() {
            if let Some(p) = probs.get_mut(id as usize) {
                *p = (c + self.k) / denom;
            }
        }
        Distribution::new(probs).expect("add-k estimate is a valid distribution")
    }

    pub fn same_vocab(&self, other: &NGramModel) -> Result<()> {
        if self.vocab == other.vocab {
            Ok(())
        } else {
            Err(Error::VocabMismatch(format!(
                "`{}` has {} tokens, `{}` has {}",
                self.provenance,
                self.vocab.len(),
                other.provenance,
                other.vocab.len()
            )))
        }
    }
}

/// Counts every transition of the BOS-padded, EOS-terminated stream
/// `prompt ++ completion` of each record.
fn count_corpus(corpus: &Corpus, vocab: &Vocabulary, order: usize) -> CountTable {
    let n = order - 1;
    let mut table = CountTable::new();
    let mut stream = Vec::new();
    for record in &corpus.records {
        stream.clear();
        stream.resize(n, BOS);
        stream.extend(encode(&record.prompt, vocab));
        stream.extend(encode(&record.completion, vocab));
        stream.push(EOS);
        for w in stream.windows(n + 1) {
            let (ctx, next) = w.split_at(n);
            table.entry(ctx.into()).or_default().add(next[0], 1.0);
        }
    }
    table.values_mut().for_each(ContextCounts::retotal);
    table
}

fn corpus_label(corpus: &Corpus) -> String {
    match &corpus.langs {
        Some((s, t)) => format!("{s}-{t}"),
        None => "corpus".into(),
    }
}

/// Trains a model from scratch over `corpus`.
pub fn pretrain(corpus: &Corpus, vocab: Vocabulary, order: usize, k: f64) -> Result<NGramModel> {
    let mut model = NGramModel::empty(vocab, order, k)?;
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("pretraining corpus is empty".into()));
    }
    if let Some(i) = corpus.records.iter().position(|r| r.completion.is_empty()) {
        return Err(Error::InvalidArgument(format!(
            "record {i} has an empty completion"
        )));
    }
    model.counts = count_corpus(corpus, &model.vocab, order);
    model.provenance = "pretrained".into();
    Ok(model)
}

/// Returns `model` with `weight * counts(corpus)` added to every count. The
/// input model is left untouched.
pub fn finetune(model: &NGramModel, corpus: &Corpus, weight: f64) -> Result<NGramModel> {
    if !(weight.is_finite() && weight > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finetune weight must be > 0, got {weight}"
        )));
    }
    let mut out = model.clone();
    for (ctx, row) in count_corpus(corpus, &model.vocab, model.order) {
        let dst = out.counts.entry(ctx).or_default();
        for (id, c) in row.iter() {
            dst.add(id, weight * c);
        }
        dst.retotal();
    }
    out.provenance = format!("{}+finetuned:{}", model.provenance, corpus_label(corpus));
    Ok(out)
}

/// Autoregressive generation with the draft stream of `rng`. Stops after EOS
/// (which is not returned) or after `max_len` tokens.
pub fn generate_with<R: RngCore + ?Sized>(
    model: &NGramModel,
    prompt: &[TokenId],
    temperature: f64,
    max_len: usize,
    rng: &mut R,
) -> Result<Vec<TokenId>> {
    check_temperature(temperature)?;
    let mut context = prompt.to_vec();
    let start = context.len();
    for _ in 0..max_len {
        let dist = model.next_dist(&context);
        let next = if temperature == 0.0 {
            argmax(&dist)
        } else {
            sample(&apply_temperature(&dist, temperature)?, rng)
        };
        if next == EOS {
            break;
        }
        context.push(next);
    }
    Ok(context.split_off(start))
}

pub fn generate(
    model: &NGramModel,
    prompt: &[TokenId],
    cfg: &SamplerConfig,
    max_len: usize,
) -> Result<Vec<TokenId>> {
    if max_len < 1 {
        return Err(Error::InvalidArgument("max_len must be >= 1".into()));
    }
    let mut rng = SessionRng::new(cfg.seed);
    generate_with(model, prompt, cfg.temperature, max_len, &mut rng.draft)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Record;
    use crate::rng::stream_rng;
    use crate::vocab::{build_vocab, UNK};
    use proptest::prelude::*;

    fn aab() -> (Corpus, Vocabulary) {
        let corpus = Corpus::new(None, vec![Record::new("", "aab")]);
        (corpus, build_vocab("ab"))
    }

    #[test]
    fn bigram_hand_counts() {
        let (corpus, vocab) = aab();
        let m = pretrain(&corpus, vocab, 2, 1.0).unwrap();
        let (a, b) = (3, 4);
        assert_eq!(m.counts(&[BOS]).unwrap().get(a), 1.0);
        assert_eq!(m.counts(&[a]).unwrap().get(a), 1.0);
        assert_eq!(m.counts(&[a]).unwrap().get(b), 1.0);
        assert_eq!(m.counts(&[b]).unwrap().get(EOS), 1.0);
        assert_eq!(m.sorted_entries().len(), 4);
        assert_eq!(m.provenance(), "pretrained");
    }

    #[test]
    fn next_dist_hand_values() {
        let (corpus, vocab) = aab();
        let m = pretrain(&corpus, vocab, 2, 1.0).unwrap();
        let d = m.next_dist(&[3]);
        assert!((d.prob(3) - 2.0 / 7.0).abs() < 1e-15);
        let sum: f64 = d.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        // BOS never follows anything but still gets k / denom.
        assert!((d.prob(BOS) - 1.0 / 7.0).abs() < 1e-15);
        // UNK has never been seen as a context.
        assert_eq!(m.next_dist(&[UNK]).probs(), &[0.2; 5]);
    }

    #[test]
    fn short_context_is_bos_padded() {
        let (corpus, vocab) = aab();
        let m = pretrain(&corpus, vocab, 3, 1.0).unwrap();
        assert_eq!(m.context_key(&[]), vec![BOS, BOS]);
        assert_eq!(m.context_key(&[3]), vec![BOS, 3]);
        assert_eq!(m.context_key(&[4, 3, 3]), vec![3, 3]);
        assert_eq!(m.next_dist(&[]), m.next_dist(&[BOS, BOS]));
    }

    #[test]
    fn doubled_corpus_doubles_counts() {
        let (corpus, vocab) = aab();
        let mut twice = corpus.clone();
        twice.records.extend(corpus.records.clone());
        let m1 = pretrain(&corpus, vocab.clone(), 2, 1.0).unwrap();
        let m2 = pretrain(&twice, vocab.clone(), 2, 1.0).unwrap();
        for ((c1, t1, n1), (c2, t2, n2)) in m1.sorted_entries().into_iter().zip(m2.sorted_entries()) {
            assert_eq!((c1, t1), (c2, t2));
            assert_eq!(2.0 * n1, n2);
        }
        // Add-k estimates depend on scale only through k: doubling k as well
        // reproduces the original distributions exactly.
        let m2k = pretrain(&twice, vocab, 2, 2.0).unwrap();
        for ctx in [[BOS], [3], [4], [UNK]] {
            assert_eq!(m1.next_dist(&ctx), m2k.next_dist(&ctx));
        }
        assert_ne!(m1.next_dist(&[3]), m2.next_dist(&[3]));
    }

    #[test]
    fn pretrain_errors() {
        let vocab = build_vocab("ab");
        let bad = Corpus::new(None, vec![Record::new("ab", "")]);
        assert!(pretrain(&bad, vocab.clone(), 2, 1.0).is_err());
        let (corpus, _) = aab();
        assert!(pretrain(&corpus, vocab.clone(), 0, 1.0).is_err());
        assert!(pretrain(&corpus, vocab.clone(), 2, 0.0).is_err());
        assert!(pretrain(&Corpus::default(), vocab, 2, 1.0).is_err());
    }

    #[test]
    fn finetune_on_same_corpus_equals_doubled_pretrain() {
        let vocab = build_vocab("abc ");
        let a = Corpus::new(
            None,
            vec![Record::new("ab ", "cab"), Record::new("c", "abba c")],
        );
        let mut aa = a.clone();
        aa.records.extend(a.records.clone());
        let base = pretrain(&a, vocab.clone(), 3, 0.5).unwrap();
        let tuned = finetune(&base, &a, 1.0).unwrap();
        let direct = pretrain(&aa, vocab, 3, 0.5).unwrap();
        assert_eq!(tuned.sorted_entries(), direct.sorted_entries());
        // the input model is unchanged
        assert_eq!(base.sorted_entries().len(), direct.sorted_entries().len());
        assert_eq!(base.provenance(), "pretrained");
        assert_eq!(tuned.provenance(), "pretrained+finetuned:corpus");
    }

    #[test]
    fn finetune_empty_corpus_is_identity_on_counts() {
        let (corpus, vocab) = aab();
        let base = pretrain(&corpus, vocab, 2, 1.0).unwrap();
        let tuned = finetune(&base, &Corpus::default(), 3.0).unwrap();
        assert_eq!(tuned.sorted_entries(), base.sorted_entries());
    }

    #[test]
    fn finetune_commutes_and_rejects_bad_weight() {
        let vocab = build_vocab("abc");
        let base = pretrain(&Corpus::new(None, vec![Record::new("", "abc")]), vocab, 2, 1.0).unwrap();
        let x = Corpus::new(None, vec![Record::new("a", "ca")]);
        let y = Corpus::new(None, vec![Record::new("b", "bb")]);
        let xy = finetune(&finetune(&base, &x, 0.5).unwrap(), &y, 0.5).unwrap();
        let yx = finetune(&finetune(&base, &y, 0.5).unwrap(), &x, 0.5).unwrap();
        assert_eq!(xy.sorted_entries(), yx.sorted_entries());
        assert!(finetune(&base, &x, 0.0).is_err());
        assert!(finetune(&base, &x, -1.0).is_err());
    }

    #[test]
    fn generation_examples() {
        // Only EOS ever follows anything: mass concentrates on EOS at T=0.
        let eos_model = {
            let mut m = NGramModel::empty(build_vocab("a"), 1, 1e-9).unwrap();
            m.insert_count(&[], EOS, 1.0);
            m.retotal_all();
            m
        };
        let out = generate(&eos_model, &[3], &SamplerConfig::greedy(), 10).unwrap();
        assert!(out.is_empty());

        let vocab = build_vocab("ab");
        let corpus = Corpus::new(None, vec![Record::new("", "abababab")]);
        let m = pretrain(&corpus, vocab, 2, 0.1).unwrap();
        let g1 = generate(&m, &[3], &SamplerConfig::new(0.0, 1).unwrap(), 6).unwrap();
        let g2 = generate(&m, &[3], &SamplerConfig::new(0.0, 2).unwrap(), 6).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(g1, vec![4, 3, 4, 3, 4, 3]);
        assert!(generate(&m, &[3], &SamplerConfig::greedy(), 0).is_err());
    }

    #[test]
    fn greedy_generation_matches_stepwise_argmax() {
        let text = "the cat sat on the mat. the dog sat on the log.";
        let vocab = build_vocab(text);
        let corpus = Corpus::new(None, vec![Record::new("", text)]);
        let m = pretrain(&corpus, vocab.clone(), 3, 0.2).unwrap();
        let prompt = encode("the ", &vocab);
        let out = generate(&m, &prompt, &SamplerConfig::greedy(), 40).unwrap();
        let mut ctx = prompt.clone();
        let mut oracle = Vec::new();
        for _ in 0..40 {
            let probs = m.next_dist(&ctx);
            let mut best = 0;
            for i in 0..probs.len() {
                if probs.probs()[i] > probs.probs()[best] {
                    best = i;
                }
            }
            if best as TokenId == EOS {
                break;
            }
            ctx.push(best as TokenId);
            oracle.push(best as TokenId);
        }
        assert_eq!(out, oracle);
    }

    #[test]
    fn stochastic_generation_is_seeded() {
        let text = "abcabcaabbcc";
        let vocab = build_vocab(text);
        let m = pretrain(&Corpus::new(None, vec![Record::new("", text)]), vocab, 2, 0.5).unwrap();
        let cfg = SamplerConfig::new(1.0, 42).unwrap();
        assert_eq!(generate(&m, &[3], &cfg, 50).unwrap(), generate(&m, &[3], &cfg, 50).unwrap());
        let mut r1 = stream_rng(5, 0);
        let mut r2 = stream_rng(6, 0);
        let a = generate_with(&m, &[3], 1.0, 200, &mut r1).unwrap();
        let b = generate_with(&m, &[3], 1.0, 200, &mut r2).unwrap();
        assert_ne!(a, b);
    }

    proptest! {
        #[test]
        fn next_dist_valid_for_any_context(
            ctx in prop::collection::vec(0u32..12, 0..8),
            order in 1usize..5,
        ) {
            let text = "abcab cba bca";
            let vocab = build_vocab(text);
            let m = pretrain(&Corpus::new(None, vec![Record::new("", text)]), vocab, order, 0.3).unwrap();
            let d = m.next_dist(&ctx);
            prop_assert_eq!(d.len(), m.vocab().len());
            let sum: f64 = d.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
