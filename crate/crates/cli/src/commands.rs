use std::io::Read as _;
use std::path::{Path, PathBuf};

use specdesk::bench::{
    emit_report, run_grid, scaling_curve, CostModel, ExperimentGrid, ScalingConfig, DEFAULT_COST_RATIO,
    DEFAULT_SEEDS,
};
use specdesk::corpus::{Corpus, Record};
use specdesk::distill::{eval_prompts, self_distill, DistillJob, PromptTemplate, DEFAULT_TEMPERATURES};
use specdesk::model_io::{load_model, save_model};
use specdesk::ngram::{finetune, pretrain, NGramModel};
use specdesk::specdec::{decode_speculative, SpecConfig, DEFAULT_K};
use specdesk::synth::{bitext, paragraphs, Pair};
use specdesk::vocab::{build_vocab, decode_tokens, encode};
use specdesk::{Error, Result, SessionRng, Vocabulary};

use crate::config::{ConfigFile, Section};
use crate::route::{select_drafter, DrafterRegistry};

/// Prefixes I/O errors with the path involved.
fn at<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

pub fn read_model(path: &Path) -> Result<NGramModel> {
    at(path, load_model(path))
}

pub fn read_corpus(path: &Path) -> Result<Corpus> {
    at(path, Corpus::load(path))
}

fn write_model(model: &NGramModel, path: &Path) -> Result<()> {
    at(path, save_model(model, path))
}

fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    at(path, corpus.save(path))
}

/// `-` reads all of stdin, dropping one trailing newline.
pub fn text_arg(arg: &str) -> Result<String> {
    if arg != "-" {
        return Ok(arg.to_string());
    }
    let mut s = String::new();
    std::io::stdin().read_to_string(&mut s)?;
    if s.ends_with('\n') {
        s.pop();
        if s.ends_with('\r') {
            s.pop();
        }
    }
    Ok(s)
}

pub fn vocab_build(corpora: &[PathBuf], out: &Path) -> Result<String> {
    let mut vocab = Vocabulary::reserved_only();
    for path in corpora {
        vocab.extend_from_text(&read_corpus(path)?.text());
    }
    at(out, vocab.save(out))?;
    Ok(format!("wrote {} symbols to {}", vocab.len(), out.display()))
}

pub fn train_pretrain(corpora: &[PathBuf], vocab: Option<&Path>, order: usize, k: f64, out: &Path) -> Result<String> {
    let mut corpus = Corpus::default();
    for (i, path) in corpora.iter().enumerate() {
        let part = read_corpus(path)?;
        if i == 0 {
            corpus.langs = part.langs.clone();
        } else if corpus.langs != part.langs {
            corpus.langs = None;
        }
        corpus.records.extend(part.records);
    }
    let vocab = match vocab {
        Some(p) => at(p, Vocabulary::load(p))?,
        None => build_vocab(&corpus.text()),
    };
    let model = pretrain(&corpus, vocab, order, k)?;
    write_model(&model, out)?;
    Ok(format!(
        "trained order-{order} model on {} tokens, wrote {}",
        corpus.token_count(),
        out.display()
    ))
}

pub fn train_finetune(model: &Path, corpus: &Path, weight: f64, max_tokens: Option<usize>, out: &Path) -> Result<String> {
    let base = read_model(model)?;
    let mut corpus = read_corpus(corpus)?;
    if let Some(budget) = max_tokens {
        if budget == 0 {
            return Err(Error::InvalidArgument("--max-tokens must be >= 1".into()));
        }
        corpus = corpus.truncate_tokens(budget);
    }
    let tuned = finetune(&base, &corpus, weight)?;
    write_model(&tuned, out)?;
    Ok(format!(
        "finetuned on {} tokens with weight {weight}, wrote {}",
        corpus.token_count(),
        out.display()
    ))
}

pub struct DistillArgs<'a> {
    pub target: &'a Path,
    pub prompts: &'a Path,
    pub temps: Vec<f64>,
    pub samples: usize,
    pub max_len: usize,
    pub template: Option<String>,
    pub seed: u64,
    pub out: &'a Path,
}

pub fn distill(a: DistillArgs) -> Result<String> {
    let target = read_model(a.target)?;
    let prompts = read_corpus(a.prompts)?;
    let job = DistillJob {
        temperatures: a.temps,
        samples_per_temperature: a.samples,
        max_len: a.max_len,
        seed: a.seed,
        template: a.template.map(PromptTemplate).unwrap_or_default(),
    };
    let corpus = self_distill(&target, &prompts, &job)?;
    write_corpus(&corpus, a.out)?;
    Ok(format!(
        "wrote {} records ({} tokens) to {}",
        corpus.len(),
        corpus.token_count(),
        a.out.display()
    ))
}

pub struct DecodeArgs<'a> {
    pub target: &'a Path,
    pub drafter: &'a Path,
    pub prompt: &'a str,
    pub temperature: f64,
    pub k: usize,
    pub max_new: usize,
    pub seed: u64,
    pub stats: bool,
}

pub fn decode(a: DecodeArgs) -> Result<String> {
    let target = read_model(a.target)?;
    let drafter = read_model(a.drafter)?;
    let prompt = text_arg(a.prompt)?;
    let cfg = SpecConfig {
        k: a.k,
        temperature: a.temperature,
        max_new_tokens: a.max_new,
        seed: a.seed,
    };
    let ids = encode(&prompt, target.vocab());
    let (out, stats) = decode_speculative(&target, &drafter, &ids, &cfg, &mut SessionRng::new(a.seed))?;
    let text = decode_tokens(&out, target.vocab())?;
    if a.stats {
        let json = serde_json::to_string(&stats).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(format!("{text}\n{json}"))
    } else {
        Ok(text)
    }
}

fn prompts_of(cfg: &ConfigFile, path: &str, template: &PromptTemplate, max_prompts: usize) -> Result<Vec<String>> {
    let corpus = read_corpus(&cfg.resolve(path))?;
    let mut prompts = eval_prompts(&corpus, template)?;
    prompts.truncate(max_prompts);
    Ok(prompts)
}

fn template_of(top: &Section) -> PromptTemplate {
    top.get("template").map(|t| PromptTemplate(t.to_string())).unwrap_or_default()
}

fn seeds_of(top: &Section, seed: Option<u64>) -> Result<Vec<u64>> {
    let default = match seed {
        Some(s) => vec![s, s.wrapping_add(1), s.wrapping_add(2)],
        None => DEFAULT_SEEDS.to_vec(),
    };
    top.list_or("seeds", default)
}

pub fn bench_grid(cfg: &ConfigFile, out_dir: &Path, jobs: usize, seed: Option<u64>) -> Result<String> {
    let top = cfg.top();
    let target = read_model(&cfg.resolve(top.require("target")?))?;
    let template = template_of(top);
    let max_prompts = top.parse_or("max_prompts", usize::MAX)?;
    let section = |name: &str| {
        cfg.section(name)
            .ok_or_else(|| Error::InvalidArgument(format!("grid config has no [{name}] section")))
    };
    let drafters = section("drafters")?
        .entries
        .iter()
        .map(|(name, path, _)| Ok((name.clone(), read_model(&cfg.resolve(path))?)))
        .collect::<Result<Vec<_>>>()?;
    let corpora = section("corpora")?
        .entries
        .iter()
        .map(|(name, path, _)| Ok((name.clone(), prompts_of(cfg, path, &template, max_prompts)?)))
        .collect::<Result<Vec<_>>>()?;
    let grid = ExperimentGrid {
        target,
        drafters,
        corpora,
        temperatures: top.list_or("temperatures", vec![0.0, 1.0])?,
        seeds: seeds_of(top, seed)?,
        k: top.parse_or("k", DEFAULT_K)?,
        max_new_tokens: top.parse_or("max_new_tokens", 64)?,
        cost: CostModel::new(top.parse_or("cost_ratio", DEFAULT_COST_RATIO)?)?,
        jobs,
    };
    let result = run_grid(&grid)?;
    for cell in result.errors() {
        if let Err(e) = &cell.result {
            log::warn!(
                "cell drafter={} corpus={} T={} seed={} failed: {e}",
                cell.drafter,
                cell.corpus,
                cell.temperature,
                cell.seed
            );
        }
    }
    let (csv, md) = at(out_dir, emit_report(&result.to_table(), out_dir, "grid"))?;
    Ok(format!(
        "{} cells ({} failed), {} rows; wrote {} and {}",
        result.cells.len(),
        result.errors().count(),
        result.rows.len(),
        csv.display(),
        md.display()
    ))
}

pub fn bench_scaling(cfg: &ConfigFile, out_dir: &Path, seed: Option<u64>) -> Result<String> {
    let top = cfg.top();
    let target = read_model(&cfg.resolve(top.require("target")?))?;
    let drafter = read_model(&cfg.resolve(top.require("drafter")?))?;
    let corpus = read_corpus(&cfg.resolve(top.require("corpus")?))?;
    let template = template_of(top);
    let max_prompts = top.parse_or("max_prompts", usize::MAX)?;
    let eval = prompts_of(cfg, top.require("eval")?, &template, max_prompts)?;
    let budgets: Vec<usize> = top.list_or("budgets", vec![])?;
    let scfg = ScalingConfig {
        k: top.parse_or("k", DEFAULT_K)?,
        temperature: top.parse_or("temperature", 0.0)?,
        seeds: seeds_of(top, seed)?,
        max_new_tokens: top.parse_or("max_new_tokens", 64)?,
        cost: CostModel::new(top.parse_or("cost_ratio", DEFAULT_COST_RATIO)?)?,
        weight: top.parse_or("weight", 1.0)?,
    };
    let curve = scaling_curve(&target, &drafter, &corpus, &budgets, &eval, &scfg)?;
    let (csv, md) = at(out_dir, emit_report(&curve.to_table(&scfg), out_dir, "scaling"))?;
    Ok(format!(
        "{} points, spearman(log budget, mean_accepted) = {:.6}; wrote {} and {}",
        curve.points.len(),
        curve.spearman_accepted,
        csv.display(),
        md.display()
    ))
}

pub fn route(registry: &Path, text: &str, show_path: bool) -> Result<String> {
    let registry = DrafterRegistry::load(registry)?;
    let tag = select_drafter(&text_arg(text)?, &registry)?;
    match registry.path_of(&tag) {
        Some(path) if show_path => Ok(format!("{tag}\t{}", path.display())),
        _ => Ok(tag),
    }
}

pub struct SynthArgs<'a> {
    pub pair: &'a str,
    pub records: usize,
    pub instruct: bool,
    pub paragraphs: Option<usize>,
    pub seed: u64,
    pub out: &'a Path,
}

pub fn synth(a: SynthArgs) -> Result<String> {
    let pair = Pair::from_tag(a.pair)?;
    let corpus = match a.paragraphs {
        Some(n) => paragraphs(pair, a.records, n, a.seed),
        None => bitext(pair, a.records, a.seed),
    };
    let corpus = if a.instruct {
        if a.paragraphs.is_some() {
            return Err(Error::InvalidArgument("--instruct needs sentence pairs, not --paragraphs".into()));
        }
        let prompts = eval_prompts(&corpus, &PromptTemplate::default())?;
        Corpus {
            records: prompts
                .into_iter()
                .zip(&corpus.records)
                .map(|(p, r)| Record::new(p, r.completion.clone()))
                .collect(),
            ..corpus
        }
    } else {
        corpus
    };
    write_corpus(&corpus, a.out)?;
    Ok(format!(
        "wrote {} records ({} tokens) to {}",
        corpus.len(),
        corpus.token_count(),
        a.out.display()
    ))
}

pub fn default_temps() -> Vec<f64> {
    DEFAULT_TEMPERATURES.to_vec()
}
