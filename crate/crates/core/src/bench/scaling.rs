use rayon::prelude::*;

use super::{cost_speedup, evaluate, mean_accepted, mean_std, CostModel, ReportTable, DEFAULT_SEEDS};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::ngram::{finetune, NGramModel};
use crate::specdec::{SpecConfig, DEFAULT_K};
use crate::vocab::encode;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub k: usize,
    pub temperature: f64,
    pub seeds: Vec<u64>,
    pub max_new_tokens: usize,
    pub cost: CostModel,
    /// Finetune weight applied at every budget.
    pub weight: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            temperature: 0.0,
            seeds: DEFAULT_SEEDS.to_vec(),
            max_new_tokens: 64,
            cost: CostModel::default(),
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub budget: usize,
    /// Tokens actually used; smaller than `budget` when the corpus ran out.
    pub tokens_used: usize,
    pub mean_accepted: f64,
    pub std_accepted: f64,
    pub cost_speedup: f64,
    pub std_speedup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCurve {
    pub points: Vec<ScalingPoint>,
    /// Rank correlation of budget against mean accepted tokens. Ranks are
    /// invariant under the log, so this equals the correlation with log(b).
    pub spearman_accepted: f64,
    pub spearman_speedup: f64,
}

/// For every budget, finetunes a fresh copy of `drafter_base` on the first
/// `budget` tokens of `finetune_corpus` and measures it against `target`.
pub fn scaling_curve(
    target: &NGramModel,
    drafter_base: &NGramModel,
    finetune_corpus: &Corpus,
    budgets: &[usize],
    eval_prompts: &[String],
    cfg: &ScalingConfig,
) -> Result<ScalingCurve> {
    if budgets.is_empty() {
        return Err(Error::InvalidArgument("no token budgets".into()));
    }
    if budgets.contains(&0) {
        return Err(Error::InvalidArgument("token budget must be >= 1".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("token budgets must be strictly increasing".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    target.same_vocab(drafter_base)?;
    let available = finetune_corpus.token_count();
    let prompts: Vec<_> = eval_prompts.iter().map(|p| encode(p, target.vocab())).collect();

    let points = budgets
        .par_iter()
        .map(|&budget| {
            if budget > available {
                log::warn!("budget {budget} exceeds the {available} corpus tokens; clamping");
            }
            let slice = finetune_corpus.truncate_tokens(budget);
            let drafter = finetune(drafter_base, &slice, cfg.weight)?;
            let mut accepted = Vec::new();
            let mut speedup = Vec::new();
            for &seed in &cfg.seeds {
                let spec = SpecConfig {
                    k: cfg.k,
                    temperature: cfg.temperature,
                    max_new_tokens: cfg.max_new_tokens,
                    seed,
                };
                let stats = evaluate(target, &drafter, &prompts, &spec)?;
                accepted.push(mean_accepted(&stats)?);
                speedup.push(cost_speedup(&stats, &cfg.cost)?);
            }
            let (mean_accepted, std_accepted) = mean_std(&accepted);
            let (cost_speedup, std_speedup) = mean_std(&speedup);
            Ok(ScalingPoint {
                budget,
                tokens_used: slice.token_count(),
                mean_accepted,
                std_accepted,
                cost_speedup,
                std_speedup,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let log_budget: Vec<f64> = points.iter().map(|p| (p.budget as f64).ln()).collect();
    let acc: Vec<f64> = points.iter().map(|p| p.mean_accepted).collect();
    let spd: Vec<f64> = points.iter().map(|p| p.cost_speedup).collect();
    Ok(ScalingCurve {
        spearman_accepted: super::spearman(&log_budget, &acc),
        spearman_speedup: super::spearman(&log_budget, &spd),
        points,
    })
}

impl ScalingCurve {
    pub fn to_table(&self, cfg: &ScalingConfig) -> ReportTable {
        let f = |x: f64| format!("{x:.6}");
        ReportTable {
            columns: [
                "budget",
                "tokens_used",
                "mean_accepted",
                "std_accepted",
                "cost_speedup",
                "std_speedup",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            rows: self
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.budget.to_string(),
                        p.tokens_used.to_string(),
                        f(p.mean_accepted),
                        f(p.std_accepted),
                        f(p.cost_speedup),
                        f(p.std_speedup),
                    ]
                })
                .collect(),
            echo: vec![
                ("K".into(), cfg.k.to_string()),
                ("temperature".into(), format!("{:?}", cfg.temperature)),
                ("cost_ratio".into(), format!("{:?}", cfg.cost.c)),
                ("weight".into(), format!("{:?}", cfg.weight)),
                ("max_new_tokens".into(), cfg.max_new_tokens.to_string()),
                (
                    "seeds".into(),
                    cfg.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
                ),
                ("spearman_log_budget_accepted".into(), f(self.spearman_accepted)),
                ("spearman_log_budget_speedup".into(), f(self.spearman_speedup)),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Record;
    use crate::ngram::pretrain;
    use crate::vocab::build_vocab;

    fn setup() -> (NGramModel, NGramModel, Corpus) {
        let text = "one two three four five. ";
        let vocab = build_vocab(text);
        let corpus = Corpus::new(None, vec![Record::new("", text.repeat(3)); 30]);
        let target = pretrain(&corpus, vocab.clone(), 4, 0.05).unwrap();
        let base = pretrain(&Corpus::new(None, vec![Record::new("", "five four")]), vocab, 2, 0.05).unwrap();
        (target, base, corpus)
    }

    #[test]
    fn one_point_per_budget() {
        let (target, base, corpus) = setup();
        let prompts = vec!["one ".to_string(), "three ".to_string()];
        let cfg = ScalingConfig {
            max_new_tokens: 30,
            ..ScalingConfig::default()
        };
        let curve = scaling_curve(&target, &base, &corpus, &[10, 100, 1000], &prompts, &cfg).unwrap();
        assert_eq!(curve.points.len(), 3);
        assert_eq!(curve.points[1].tokens_used, 100);
        assert!(curve.points[2].mean_accepted >= curve.points[0].mean_accepted);
    }

    #[test]
    fn budget_errors_and_clamping() {
        let (target, base, corpus) = setup();
        let prompts = vec!["one ".to_string()];
        let cfg = ScalingConfig::default();
        assert!(scaling_curve(&target, &base, &corpus, &[0, 10], &prompts, &cfg).is_err());
        assert!(scaling_curve(&target, &base, &corpus, &[10, 10], &prompts, &cfg).is_err());
        assert!(scaling_curve(&target, &base, &corpus, &[], &prompts, &cfg).is_err());
        let huge = corpus.token_count() * 10;
        let curve = scaling_curve(&target, &base, &corpus, &[10, huge], &prompts, &cfg).unwrap();
        assert_eq!(curve.points[1].tokens_used, corpus.token_count());
    }
}
