use serde::Serialize;

/// Counters of one speculative decode run.
///
/// `truncated_tokens` counts tokens a cycle produced but the run discarded,
/// either past `max_new_tokens` or after an accepted EOS, so that
/// `emitted_tokens + truncated_tokens == sum(accepted + 1)` always holds.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DecodeStats {
    pub cycles: u64,
    pub accepted_per_cycle: Vec<u32>,
    pub emitted_tokens: u64,
    pub truncated_tokens: u64,
    pub target_calls: u64,
    pub drafter_calls: u64,
    pub wall_time_ns: Option<u64>,
    pub k: usize,
    pub temperature: f64,
    pub seed: u64,
}

impl DecodeStats {
    pub fn new(k: usize, temperature: f64, seed: u64) -> Self {
        Self {
            k,
            temperature,
            seed,
            ..Self::default()
        }
    }

    pub fn accepted_total(&self) -> u64 {
        self.accepted_per_cycle.iter().map(|&a| a as u64).sum()
    }

    /// Checks the bookkeeping identities.
    pub fn reconciles(&self) -> bool {
        let produced = self.accepted_total() + self.cycles;
        self.cycles == self.accepted_per_cycle.len() as u64
            && self.target_calls == self.cycles
            && self.emitted_tokens + self.truncated_tokens == produced
            && self.drafter_calls >= self.accepted_total()
    }

    /// Adds the counters of `other`; the config echo of `self` is kept.
    pub fn merge(&mut self, other: &DecodeStats) {
        self.cycles += other.cycles;
        self.accepted_per_cycle
            .extend_from_slice(&other.accepted_per_cycle);
        self.emitted_tokens += other.emitted_tokens;
        self.truncated_tokens += other.truncated_tokens;
        self.target_calls += other.target_calls;
        self.drafter_calls += other.drafter_calls;
        self.wall_time_ns = match (self.wall_time_ns, other.wall_time_ns) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        };
    }
}
