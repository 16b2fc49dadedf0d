//! Draft, verify, accept.
//!
//! One cycle of speculative decoding:
//!
//! 1. the drafter samples up to `K` tokens autoregressively ([`draft`]);
//! 2. the target scores the context extended by every draft prefix, giving
//!    `len + 1` distributions ([`score_parallel`]);
//! 3. draft tokens are accepted left to right. With `T > 0` token `x` at
//!    position `j` survives iff `r < min(1, q_j(x) / p_j(x))` for a fresh
//!    uniform `r`; the first rejected position is replaced by a sample from
//!    `norm(max(q_j - p_j, 0))` ([`verify_stochastic`]). With `T = 0` a token
//!    survives iff it equals the target argmax ([`verify_greedy`]);
//! 4. if the whole draft survives, one extra token is taken from the target's
//!    distribution after the last draft token.
//!
//! Every cycle therefore emits between 1 and `K + 1` tokens, and the emitted
//! stream has exactly the target's law.

use rand::RngCore;

use crate::dist::{apply_temperature, argmax, sample, Distribution};
use crate::error::{Error, Result};
use crate::ngram::NGramModel;
use crate::rng::{check_temperature, uniform01, SessionRng};
use crate::stats::DecodeStats;
use crate::vocab::{TokenId, EOS};

pub const DEFAULT_K: usize = 5;

/// Tokens proposed by the drafter together with the (post-temperature)
/// distributions they were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Draft {
    tokens: Vec<TokenId>,
    dists: Vec<Distribution>,
}

impl Draft {
    pub fn new(tokens: Vec<TokenId>, dists: Vec<Distribution>) -> Result<Self> {
        if tokens.is_empty() || tokens.len() != dists.len() {
            return Err(Error::InvalidArgument(format!(
                "draft needs matching non-empty tokens and distributions ({} vs {})",
                tokens.len(),
                dists.len()
            )));
        }
        if let Some((&token, _)) = tokens.iter().zip(&dists).find(|(&t, d)| d.prob(t) <= 0.0) {
            return Err(Error::DraftInvariant { token });
        }
        Ok(Self { tokens, dists })
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn dists(&self) -> &[Distribution] {
        &self.dists
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The token that closes a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalToken {
    /// Drawn from the residual at the first rejected position.
    Correction(TokenId),
    /// Drawn from the target after a fully accepted draft.
    Bonus(TokenId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerificationOutcome {
    pub accepted_count: usize,
    pub last: FinalToken,
}

impl VerificationOutcome {
    pub fn correction(&self) -> Option<TokenId> {
        match self.last {
            FinalToken::Correction(t) => Some(t),
            FinalToken::Bonus(_) => None,
        }
    }

    pub fn bonus(&self) -> Option<TokenId> {
        match self.last {
            FinalToken::Bonus(t) => Some(t),
            FinalToken::Correction(_) => None,
        }
    }

    pub fn final_token(&self) -> TokenId {
        match self.last {
            FinalToken::Correction(t) | FinalToken::Bonus(t) => t,
        }
    }

    pub fn emitted(&self) -> usize {
        self.accepted_count + 1
    }

    /// Tokens this cycle appends to the sequence.
    pub fn tokens(&self, draft: &Draft) -> Vec<TokenId> {
        let mut out = draft.tokens[..self.accepted_count].to_vec();
        out.push(self.final_token());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecConfig {
    /// Draft length per cycle.
    pub k: usize,
    /// Shared by drafting and verification.
    pub temperature: f64,
    pub max_new_tokens: usize,
    pub seed: u64,
}

impl Default for SpecConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            temperature: 0.0,
            max_new_tokens: 128,
            seed: 0,
        }
    }
}

impl SpecConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidArgument("K must be >= 1".into()));
        }
        if self.max_new_tokens < 1 {
            return Err(Error::InvalidArgument("max_new_tokens must be >= 1".into()));
        }
        check_temperature(self.temperature)
    }
}

/// Samples up to `k` tokens from the drafter. Stops right after an EOS.
pub fn draft<R: RngCore + ?Sized>(
    drafter: &NGramModel,
    context: &[TokenId],
    k: usize,
    temperature: f64,
    rng: &mut R,
) -> Result<Draft> {
    if k < 1 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    check_temperature(temperature)?;
    let mut ctx = context.to_vec();
    let mut tokens = Vec::with_capacity(k);
    let mut dists = Vec::with_capacity(k);
    for _ in 0..k {
        let p = apply_temperature(&drafter.next_dist(&ctx), temperature)?;
        let x = if temperature == 0.0 {
            argmax(&p)
        } else {
            sample(&p, rng)
        };
        ctx.push(x);
        tokens.push(x);
        dists.push(p);
        if x == EOS {
            break;
        }
    }
    Draft::new(tokens, dists)
}

/// Target distributions after `context`, `context + d[..1]`, ...,
/// `context + d[..len]`, each with the temperature applied.
pub fn score_parallel(
    target: &NGramModel,
    context: &[TokenId],
    d: &Draft,
    temperature: f64,
) -> Result<Vec<Distribution>> {
    let mut ctx = Vec::with_capacity(context.len() + d.len());
    ctx.extend_from_slice(context);
    let base = ctx.len();
    (0..=d.len())
        .map(|i| {
            ctx.truncate(base);
            ctx.extend_from_slice(&d.tokens[..i]);
            apply_temperature(&target.next_dist(&ctx), temperature)
        })
        .collect()
}

/// `max(q - p, 0)` renormalized.
pub fn residual_dist(q: &Distribution, p: &Distribution) -> Result<Distribution> {
    if q.len() != p.len() {
        return Err(Error::InvalidArgument(format!(
            "residual of distributions with lengths {} and {}",
            q.len(),
            p.len()
        )));
    }
    let positive: Vec<f64> = q
        .probs()
        .iter()
        .zip(p.probs())
        .map(|(a, b)| (a - b).max(0.0))
        .collect();
    if positive.iter().sum::<f64>() < 1e-12 {
        return Err(Error::UnreachableResidual);
    }
    Distribution::from_weights(positive)
}

fn check_scores(d: &Draft, target_dists: &[Distribution]) -> Result<()> {
    if target_dists.len() != d.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} target distributions for a draft of {}, got {}",
            d.len() + 1,
            d.len(),
            target_dists.len()
        )));
    }
    Ok(())
}

/// Rejection-sampling verification. Draws one uniform per examined
/// position, then one more for the correction or bonus token.
pub fn verify_stochastic<R: RngCore + ?Sized>(
    d: &Draft,
    target_dists: &[Distribution],
    rng: &mut R,
) -> Result<VerificationOutcome> {
    check_scores(d, target_dists)?;
    for (j, (&x, p)) in d.tokens.iter().zip(&d.dists).enumerate() {
        let q = &target_dists[j];
        let px = p.prob(x);
        if px <= 0.0 {
            return Err(Error::DraftInvariant { token: x });
        }
        let r = uniform01(rng);
        if r < (q.prob(x) / px).min(1.0) {
            continue;
        }
        let correction = sample(&residual_dist(q, p)?, rng);
        return Ok(VerificationOutcome {
            accepted_count: j,
            last: FinalToken::Correction(correction),
        });
    }
    Ok(VerificationOutcome {
        accepted_count: d.len(),
        last: FinalToken::Bonus(sample(&target_dists[d.len()], rng)),
    })
}

/// Greedy verification: keep the longest prefix that matches the target
/// argmax, then emit the target argmax at the next position.
pub fn verify_greedy(d: &Draft, target_dists: &[Distribution]) -> Result<VerificationOutcome> {
    check_scores(d, target_dists)?;
    for (j, &x) in d.tokens.iter().enumerate() {
        let best = argmax(&target_dists[j]);
        if x != best {
            return Ok(VerificationOutcome {
                accepted_count: j,
                last: FinalToken::Correction(best),
            });
        }
    }
    Ok(VerificationOutcome {
        accepted_count: d.len(),
        last: FinalToken::Bonus(argmax(&target_dists[d.len()])),
    })
}

/// Runs draft/verify cycles until EOS or `max_new_tokens`. Returns the
/// continuation (without the EOS) and the run's counters. Tokens a cycle
/// produces past the limit, or after an accepted EOS, are dropped and
/// counted in [`DecodeStats::truncated_tokens`].
pub fn decode_speculative(
    target: &NGramModel,
    drafter: &NGramModel,
    prompt: &[TokenId],
    cfg: &SpecConfig,
    rng: &mut SessionRng,
) -> Result<(Vec<TokenId>, DecodeStats)> {
    cfg.validate()?;
    target.same_vocab(drafter)?;
    let mut stats = DecodeStats::new(cfg.k, cfg.temperature, cfg.seed);
    let mut context = prompt.to_vec();
    let start = context.len();
    let mut done = false;
    while !done {
        let d = draft(drafter, &context, cfg.k, cfg.temperature, &mut rng.draft)?;
        let scores = score_parallel(target, &context, &d, cfg.temperature)?;
        let outcome = if cfg.temperature > 0.0 {
            verify_stochastic(&d, &scores, &mut rng.accept)?
        } else {
            verify_greedy(&d, &scores)?
        };
        stats.cycles += 1;
        stats.target_calls += 1;
        stats.drafter_calls += d.len() as u64;
        stats.accepted_per_cycle.push(outcome.accepted_count as u32);

        for token in outcome.tokens(&d) {
            if done {
                stats.truncated_tokens += 1;
                continue;
            }
            stats.emitted_tokens += 1;
            if token == EOS {
                done = true;
            } else {
                context.push(token);
            }
            if stats.emitted_tokens as usize >= cfg.max_new_tokens {
                done = true;
            }
        }
    }
    Ok((context.split_off(start), stats))
}
