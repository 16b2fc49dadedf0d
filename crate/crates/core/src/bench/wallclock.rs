//! Wall-clock speedup. Advisory only: the numbers depend on the machine.

use std::time::Instant;

use super::mean_std;
use crate::error::{Error, Result};
use crate::ngram::{generate_with, NGramModel};
use crate::rng::{derive_seed, SessionRng};
use crate::specdec::{decode_speculative, SpecConfig};
use crate::vocab::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub struct WallclockResult {
    /// Median autoregressive time over median speculative time.
    pub ratio: f64,
    /// Sample standard deviation of the per-repetition ratios.
    pub std: f64,
    pub baseline_ns: u64,
    pub speculative_ns: u64,
    pub repetitions: usize,
}

fn median(xs: &mut [u64]) -> u64 {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

/// Times `body` once per repetition.
pub fn time_reps(repetitions: usize, mut body: impl FnMut() -> Result<()>) -> Result<Vec<u64>> {
    (0..repetitions)
        .map(|_| {
            let start = Instant::now();
            body()?;
            Ok(start.elapsed().as_nanos() as u64)
        })
        .collect()
}

/// Compares two timed workloads by median over repetitions.
pub fn compare(repetitions: usize, baseline: impl FnMut() -> Result<()>, candidate: impl FnMut() -> Result<()>) -> Result<WallclockResult> {
    if repetitions < 1 {
        return Err(Error::InvalidArgument("repetitions must be >= 1".into()));
    }
    let mut base = time_reps(repetitions, baseline)?;
    let mut spec = time_reps(repetitions, candidate)?;
    let ratios: Vec<f64> = base
        .iter()
        .zip(&spec)
        .map(|(&b, &s)| b as f64 / s.max(1) as f64)
        .collect();
    let baseline_ns = median(&mut base);
    let speculative_ns = median(&mut spec);
    Ok(WallclockResult {
        ratio: baseline_ns as f64 / speculative_ns.max(1) as f64,
        std: mean_std(&ratios).1,
        baseline_ns,
        speculative_ns,
        repetitions,
    })
}

/// Autoregressive target decoding against speculative decoding on the same
/// prompts and seeds.
pub fn wallclock_speedup(
    target: &NGramModel,
    drafter: &NGramModel,
    prompts: &[Vec<TokenId>],
    cfg: &SpecConfig,
    repetitions: usize,
) -> Result<WallclockResult> {
    cfg.validate()?;
    target.same_vocab(drafter)?;
    compare(
        repetitions,
        || {
            for (i, p) in prompts.iter().enumerate() {
                let seed = derive_seed(cfg.seed, &[i as u64]);
                let mut rng = SessionRng::new(seed);
                generate_with(target, p, cfg.temperature, cfg.max_new_tokens, &mut rng.draft)?;
            }
            Ok(())
        },
        || {
            for (i, p) in prompts.iter().enumerate() {
                let seed = derive_seed(cfg.seed, &[i as u64]);
                let run = SpecConfig { seed, ..*cfg };
                decode_speculative(target, drafter, p, &run, &mut SessionRng::new(seed))?;
            }
            Ok(())
        },
    )
}

/// Measured drafter-to-target cost of one `next_dist` call, for comparing
/// wall-clock against the cost model.
pub fn call_cost_ratio(target: &NGramModel, drafter: &NGramModel, contexts: &[Vec<TokenId>], repetitions: usize) -> Result<f64> {
    let r = compare(
        repetitions,
        || {
            contexts.iter().for_each(|c| {
                std::hint::black_box(drafter.next_dist(c));
            });
            Ok(())
        },
        || {
            contexts.iter().for_each(|c| {
                std::hint::black_box(target.next_dist(c));
            });
            Ok(())
        },
    )?;
    Ok(r.ratio)
}
