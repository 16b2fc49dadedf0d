//! Measurement: accepted-token counts, cost-model speedup, experiment grids
//! and training-budget scaling curves.
//!
//! Speedup is reported under a [`CostModel`]: autoregressive decoding pays one
//! target call per token, speculative decoding pays one target call per cycle
//! plus `c` per drafter call. Wall-clock timing ([`wallclock`]) is available
//! but hardware-bound, so trends are judged on the cost model.

mod grid;
mod report;
mod scaling;
pub mod wallclock;

pub use grid::{run_grid, CellMetrics, ExperimentGrid, GridCell, GridResult, GridRow};
pub use report::{emit_report, ReportTable};
pub use scaling::{scaling_curve, ScalingConfig, ScalingCurve, ScalingPoint};

use crate::error::{Error, Result};
use crate::ngram::NGramModel;
use crate::rng::{derive_seed, SessionRng};
use crate::specdec::{decode_speculative, SpecConfig};
use crate::stats::DecodeStats;
use crate::vocab::TokenId;

pub const DEFAULT_COST_RATIO: f64 = 0.1;
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];

/// Drafter-to-target per-call cost ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub c: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            c: DEFAULT_COST_RATIO,
        }
    }
}

impl CostModel {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c >= 0.0 {
            Ok(Self { c })
        } else {
            Err(Error::InvalidArgument(format!("cost ratio must be >= 0, got {c}")))
        }
    }
}

pub fn mean_accepted(stats: &DecodeStats) -> Result<f64> {
    if stats.cycles == 0 {
        return Err(Error::NoCycles);
    }
    Ok(stats.accepted_total() as f64 / stats.cycles as f64)
}

pub fn cost_speedup(stats: &DecodeStats, cm: &CostModel) -> Result<f64> {
    if stats.emitted_tokens == 0 {
        return Err(Error::InvalidArgument("no tokens emitted".into()));
    }
    let speculative = stats.target_calls as f64 + stats.drafter_calls as f64 * cm.c;
    if speculative <= 0.0 {
        return Err(Error::InvalidArgument("speculative cost is zero".into()));
    }
    Ok(stats.emitted_tokens as f64 / speculative)
}

/// Accepted draft tokens over drafted tokens.
pub fn acceptance_rate(stats: &DecodeStats) -> Result<f64> {
    if stats.drafter_calls == 0 {
        return Err(Error::NoCycles);
    }
    Ok(stats.accepted_total() as f64 / stats.drafter_calls as f64)
}

/// Decodes every prompt and sums the counters. Prompt `i` runs with seed
/// `derive_seed(seed, [i])`.
pub fn evaluate(
    target: &NGramModel,
    drafter: &NGramModel,
    prompts: &[Vec<TokenId>],
    cfg: &SpecConfig,
) -> Result<DecodeStats> {
    let mut total = DecodeStats::new(cfg.k, cfg.temperature, cfg.seed);
    for (i, prompt) in prompts.iter().enumerate() {
        let seed = derive_seed(cfg.seed, &[i as u64]);
        let run = SpecConfig { seed, ..*cfg };
        let (_, stats) = decode_speculative(target, drafter, prompt, &run, &mut SessionRng::new(seed))?;
        total.merge(&stats);
    }
    Ok(total)
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return (xs[0], 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // tied values share the average of their 1-based ranks
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties. `NaN` when either
/// side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(xs), ranks(ys));
    let (mx, _) = mean_std(&rx);
    let (my, _) = mean_std(&ry);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
