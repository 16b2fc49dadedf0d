use rayon::prelude::*;

use super::{acceptance_rate, cost_speedup, evaluate, mean_accepted, mean_std, CostModel, ReportTable};
use crate::error::{Error, Result};
use crate::ngram::NGramModel;
use crate::specdec::SpecConfig;
use crate::vocab::encode;

/// Drafters × evaluation corpora × temperatures × seeds.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub target: NGramModel,
    pub drafters: Vec<(String, NGramModel)>,
    /// Named prompt lists, already formatted.
    pub corpora: Vec<(String, Vec<String>)>,
    pub temperatures: Vec<f64>,
    pub seeds: Vec<u64>,
    pub k: usize,
    pub max_new_tokens: usize,
    pub cost: CostModel,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub mean_accepted: f64,
    pub cost_speedup: f64,
    pub acceptance_rate: f64,
    pub emitted_tokens: u64,
}

/// One (drafter, corpus, temperature, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub drafter: String,
    pub corpus: String,
    pub temperature: f64,
    pub seed: u64,
    pub result: std::result::Result<CellMetrics, String>,
}

/// Seeds of one (drafter, corpus, temperature) aggregated.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub drafter: String,
    pub corpus: String,
    pub temperature: f64,
    pub k: usize,
    pub seed_count: usize,
    pub mean_accepted: f64,
    pub std_accepted: f64,
    pub cost_speedup: f64,
    pub std_speedup: f64,
    pub acceptance_rate: f64,
    /// Emitted tokens summed over seeds.
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub rows: Vec<GridRow>,
    pub k: usize,
    pub cost: CostModel,
    pub max_new_tokens: usize,
    pub seeds: Vec<u64>,
}

pub const GRID_COLUMNS: [&str; 11] = [
    "drafter",
    "corpus",
    "temperature",
    "K",
    "seed_count",
    "mean_accepted",
    "std_accepted",
    "cost_speedup",
    "std_speedup",
    "acceptance_rate",
    "tokens",
];

impl ExperimentGrid {
    fn validate(&self) -> Result<()> {
        if self.drafters.is_empty()
            || self.corpora.is_empty()
            || self.temperatures.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::InvalidArgument("experiment grid has an empty axis".into()));
        }
        SpecConfig {
            k: self.k,
            temperature: 0.0,
            max_new_tokens: self.max_new_tokens,
            seed: 0,
        }
        .validate()?;
        for &t in &self.temperatures {
            crate::rng::check_temperature(t)?;
        }
        Ok(())
    }

    fn run_cell(&self, d: usize, c: usize, t: usize, s: usize) -> GridCell {
        let (drafter_name, drafter) = &self.drafters[d];
        let (corpus_name, prompts) = &self.corpora[c];
        let temperature = self.temperatures[t];
        let seed = self.seeds[s];
        let result = (|| {
            self.target.same_vocab(drafter)?;
            let encoded: Vec<_> = prompts.iter().map(|p| encode(p, self.target.vocab())).collect();
            let cfg = SpecConfig {
                k: self.k,
                temperature,
                max_new_tokens: self.max_new_tokens,
                seed,
            };
            let stats = evaluate(&self.target, drafter, &encoded, &cfg)?;
            Ok::<_, Error>(CellMetrics {
                mean_accepted: mean_accepted(&stats)?,
                cost_speedup: cost_speedup(&stats, &self.cost)?,
                acceptance_rate: acceptance_rate(&stats)?,
                emitted_tokens: stats.emitted_tokens,
            })
        })()
        .map_err(|e| e.to_string());
        GridCell {
            drafter: drafter_name.clone(),
            corpus: corpus_name.clone(),
            temperature,
            seed,
            result,
        }
    }
}

/// Runs every cell (in parallel) and aggregates seeds into rows. Cell order,
/// and therefore the output, is independent of scheduling. A cell that fails
/// (e.g. vocabulary mismatch) keeps its error and is left out of its row.
pub fn run_grid(grid: &ExperimentGrid) -> Result<GridResult> {
    grid.validate()?;
    let mut keys = Vec::new();
    for d in 0..grid.drafters.len() {
        for c in 0..grid.corpora.len() {
            for t in 0..grid.temperatures.len() {
                for s in 0..grid.seeds.len() {
                    keys.push((d, c, t, s));
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(grid.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let cells: Vec<GridCell> = pool.install(|| {
        keys.par_iter()
            .map(|&(d, c, t, s)| grid.run_cell(d, c, t, s))
            .collect()
    });
    let rows = cells
        .chunks(grid.seeds.len())
        .filter_map(|group| aggregate(group, grid.k))
        .collect();
    Ok(GridResult {
        cells,
        rows,
        k: grid.k,
        cost: grid.cost,
        max_new_tokens: grid.max_new_tokens,
        seeds: grid.seeds.clone(),
    })
}

fn aggregate(group: &[GridCell], k: usize) -> Option<GridRow> {
    let ok: Vec<&CellMetrics> = group.iter().filter_map(|c| c.result.as_ref().ok()).collect();
    if ok.is_empty() {
        return None;
    }
    let accepted: Vec<f64> = ok.iter().map(|m| m.mean_accepted).collect();
    let speedup: Vec<f64> = ok.iter().map(|m| m.cost_speedup).collect();
    let rates: Vec<f64> = ok.iter().map(|m| m.acceptance_rate).collect();
    let (mean_accepted, std_accepted) = mean_std(&accepted);
    let (cost_speedup, std_speedup) = mean_std(&speedup);
    let first = &group[0];
    Some(GridRow {
        drafter: first.drafter.clone(),
        corpus: first.corpus.clone(),
        temperature: first.temperature,
        k,
        seed_count: ok.len(),
        mean_accepted,
        std_accepted,
        cost_speedup,
        std_speedup,
        acceptance_rate: mean_std(&rates).0,
        tokens: ok.iter().map(|m| m.emitted_tokens).sum(),
    })
}

impl GridResult {
    pub fn errors(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| c.result.is_err())
    }

    pub fn row(&self, drafter: &str, corpus: &str, temperature: f64) -> Option<&GridRow> {
        self.rows
            .iter()
            .find(|r| r.drafter == drafter && r.corpus == corpus && r.temperature == temperature)
    }

    pub fn to_table(&self) -> ReportTable {
        let f = |x: f64| format!("{x:.6}");
        ReportTable {
            columns: GRID_COLUMNS.iter().map(|s| s.to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.drafter.clone(),
                        r.corpus.clone(),
                        format!("{:?}", r.temperature),
                        r.k.to_string(),
                        r.seed_count.to_string(),
                        f(r.mean_accepted),
                        f(r.std_accepted),
                        f(r.cost_speedup),
                        f(r.std_speedup),
                        f(r.acceptance_rate),
                        r.tokens.to_string(),
                    ]
                })
                .collect(),
            echo: vec![
                ("K".into(), self.k.to_string()),
                ("cost_ratio".into(), format!("{:?}", self.cost.c)),
                ("max_new_tokens".into(), self.max_new_tokens.to_string()),
                (
                    "seeds".into(),
                    self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
                ),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Record};
    use crate::ngram::pretrain;
    use crate::vocab::build_vocab;

    fn grid() -> ExperimentGrid {
        let text = "the cat sat on the mat. a dog ran to the log.";
        let vocab = build_vocab(text);
        let corpus = Corpus::new(None, vec![Record::new("", text); 4]);
        let target = pretrain(&corpus, vocab.clone(), 4, 0.05).unwrap();
        let good = pretrain(&corpus, vocab.clone(), 2, 0.05).unwrap();
        let weak = pretrain(&Corpus::new(None, vec![Record::new("", "a dog")]), vocab, 2, 1.0).unwrap();
        ExperimentGrid {
            target,
            drafters: vec![("good".into(), good), ("weak".into(), weak)],
            corpora: vec![
                ("cats".into(), vec!["the c".into(), "the m".into()]),
                ("dogs".into(), vec!["a d".into(), "to the l".into()]),
            ],
            temperatures: vec![0.0],
            seeds: vec![0, 1, 2],
            k: 3,
            max_new_tokens: 40,
            cost: CostModel::default(),
            jobs: 2,
        }
    }

    #[test]
    fn cell_and_row_counts() {
        let r = run_grid(&grid()).unwrap();
        assert_eq!(r.cells.len(), 12);
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.errors().count(), 0);
    }

    #[test]
    fn greedy_rows_are_seed_invariant() {
        let r = run_grid(&grid()).unwrap();
        for row in &r.rows {
            assert_eq!(row.std_accepted, 0.0);
            assert_eq!(row.std_speedup, 0.0);
            assert!(row.mean_accepted >= 0.0 && row.mean_accepted <= 3.0);
        }
    }

    #[test]
    fn vocabulary_mismatch_is_recorded_per_cell() {
        let mut g = grid();
        let alien = pretrain(&Corpus::new(None, vec![Record::new("", "xyz")]), build_vocab("xyz"), 2, 1.0).unwrap();
        g.drafters.push(("alien".into(), alien));
        let r = run_grid(&g).unwrap();
        assert_eq!(r.cells.len(), 18);
        assert_eq!(r.errors().count(), 6);
        assert_eq!(r.rows.len(), 4);
        assert!(r.errors().all(|c| c.drafter == "alien"));
    }

    #[test]
    fn empty_axis_rejected() {
        let mut g = grid();
        g.seeds.clear();
        assert!(run_grid(&g).is_err());
    }
}
