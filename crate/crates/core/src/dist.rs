//! Next-token distributions and the primitives that act on them.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::{check_temperature, uniform01};
use crate::vocab::TokenId;

pub const SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over the vocabulary: non-negative, sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("entry {p} out of range")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("weight {w} out of range")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(weights)
    }

    pub fn one_hot(len: usize, id: TokenId) -> Self {
        let mut probs = vec![0.0; len];
        probs[id as usize] = 1.0;
        Self { probs }
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, id: TokenId) -> f64 {
        self.probs.get(id as usize).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Index of the largest entry; ties go to the lowest id.
pub fn argmax(d: &Distribution) -> TokenId {
    let mut best = 0;
    for (i, &p) in d.probs.iter().enumerate() {
        if p > d.probs[best] {
            best = i;
        }
    }
    best as TokenId
}

/// Temperature transform. `T = 0` is the one-hot at [`argmax`]; `T > 0`
/// raises every entry to `1/T` and renormalizes.
pub fn apply_temperature(d: &Distribution, t: f64) -> Result<Distribution> {
    check_temperature(t)?;
    let max = d.probs.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::ZeroMass);
    }
    if t == 0.0 {
        return Ok(Distribution::one_hot(d.len(), argmax(d)));
    }
    if t == 1.0 {
        return Ok(d.clone());
    }
    // Scaling by the max first keeps the largest weight at 1, so small T
    // underflows the tail to zero instead of overflowing.
    let inv = 1.0 / t;
    let weights = d.probs.iter().map(|&p| (p / max).powf(inv)).collect();
    Distribution::from_weights(weights)
}

/// Inverse-CDF sampling from one uniform variate.
pub fn sample<R: RngCore + ?Sized>(d: &Distribution, rng: &mut R) -> TokenId {
    sample_with_uniform(d, uniform01(rng))
}

/// The token whose CDF interval contains `u`.
pub fn sample_with_uniform(d: &Distribution, u: f64) -> TokenId {
    let mut cum = 0.0;
    for (i, &p) in d.probs.iter().enumerate() {
        cum += p;
        if u < cum && p > 0.0 {
            return i as TokenId;
        }
    }
    // Rounding left the cumulative sum just short of u.
    d.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as TokenId
}
