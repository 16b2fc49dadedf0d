use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specdesk"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn specdesk")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the single stderr line of a failing run.
fn fails(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = run_in(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let stderr = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "expected one error line, got {stderr:?}");
    (out.status.code().unwrap(), lines[0].to_string())
}

/// Small synthetic data, a target, a base drafter and a finetuned drafter.
struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        ok(d, &["--seed", "1", "synth", "--pair", "de-en", "--records", "400", "--instruct", "--out", "de_train.tsv"]);
        ok(d, &["--seed", "1", "synth", "--pair", "ru-en", "--records", "400", "--instruct", "--out", "ru_train.tsv"]);
        ok(d, &["--seed", "2", "synth", "--pair", "fr-en", "--records", "60", "--out", "general.tsv"]);
        ok(d, &["--seed", "3", "synth", "--pair", "de-en", "--records", "30", "--out", "de_eval.tsv"]);
        ok(d, &["--seed", "4", "synth", "--pair", "ru-en", "--records", "30", "--out", "ru_eval.tsv"]);
        ok(d, &[
            "vocab", "build", "--corpus", "de_train.tsv", "ru_train.tsv", "general.tsv", "de_eval.tsv", "ru_eval.tsv",
            "--out", "shared.vocab",
        ]);
        ok(d, &[
            "train", "pretrain", "--corpus", "de_train.tsv", "ru_train.tsv", "--vocab", "shared.vocab", "--order", "4",
            "--out", "target.model",
        ]);
        ok(d, &[
            "train", "pretrain", "--corpus", "general.tsv", "--vocab", "shared.vocab", "--order", "2", "--out",
            "base.model",
        ]);
        ok(d, &[
            "--seed", "5", "distill", "--target", "target.model", "--prompts", "de_eval.tsv", "--max-len", "40",
            "--out", "de_distilled.tsv",
        ]);
        ok(d, &[
            "train", "finetune", "--model", "base.model", "--corpus", "de_distilled.tsv", "--weight", "1",
            "--max-tokens", "2000", "--out", "de.model",
        ]);
        Self { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn file(&self, name: &str) -> PathBuf {
        self.path().join(name)
    }
}

#[test]
fn pipeline_commands() {
    let ws = Workspace::new();
    let d = ws.path();

    // decode: drafter = target self-run equals a run with another drafter at T=0
    let decode = |drafter: &str| {
        ok(d, &[
            "decode", "--target", "target.model", "--drafter", drafter, "--prompt", "the ", "--T", "0", "--K", "4",
            "--max-new", "30", "--stats",
        ])
    };
    let self_run = decode("target.model");
    assert_eq!(self_run, decode("target.model"));
    let text = |s: &str| s.lines().next().unwrap().to_string();
    assert_eq!(text(&self_run), text(&decode("de.model")));
    assert_eq!(text(&self_run), text(&decode("base.model")));

    let stats: serde_json::Value = serde_json::from_str(self_run.lines().nth(1).unwrap()).unwrap();
    let accepted: u64 = stats["accepted_per_cycle"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .sum();
    let cycles = stats["cycles"].as_u64().unwrap();
    assert_eq!(
        stats["emitted_tokens"].as_u64().unwrap() + stats["truncated_tokens"].as_u64().unwrap(),
        accepted + cycles
    );
    assert_eq!(stats["target_calls"].as_u64().unwrap(), cycles);
    assert_eq!(stats["k"].as_u64().unwrap(), 4);

    // distill output carries its headers and is reproducible
    let tsv = fs::read_to_string(ws.file("de_distilled.tsv")).unwrap();
    assert!(tsv.starts_with("#langs=de,en\n"), "{tsv:.80}");
    assert!(tsv.contains("#temps=0.0,0.3,0.7,1.0\n"));
    ok(d, &[
        "--seed", "5", "distill", "--target", "target.model", "--prompts", "de_eval.tsv", "--max-len", "40", "--out",
        "again.tsv",
    ]);
    assert_eq!(tsv, fs::read_to_string(ws.file("again.tsv")).unwrap());
}

#[test]
fn decode_reads_prompt_from_stdin() {
    let ws = Workspace::new();
    let args = [
        "decode", "--target", "target.model", "--drafter", "base.model", "--prompt", "-", "--max-new", "20",
    ];
    let mut child = bin()
        .current_dir(ws.path())
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"the \n").unwrap();
    let piped = child.wait_with_output().unwrap();
    assert!(piped.status.success());
    let direct = ok(ws.path(), &[
        "decode", "--target", "target.model", "--drafter", "base.model", "--prompt", "the ", "--max-new", "20",
    ]);
    assert_eq!(String::from_utf8(piped.stdout).unwrap(), direct);
}

#[test]
fn bench_grid_and_scaling_write_reports() {
    let ws = Workspace::new();
    let d = ws.path();
    fs::write(
        ws.file("grid.conf"),
        "target = target.model\nk = 4\nmax_new_tokens = 24\ntemperatures = 0.0, 1.0\nmax_prompts = 10\n\
         [drafters]\nbase = base.model\nde = de.model\n[corpora]\nde-en = de_eval.tsv\nru-en = ru_eval.tsv\n",
    )
    .unwrap();
    let summary = ok(d, &["bench", "grid", "--config", "grid.conf", "--out-dir", "out", "--jobs", "2"]);
    assert!(summary.contains("24 cells (0 failed), 8 rows"), "{summary}");
    let csv = fs::read_to_string(ws.file("out/grid.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "drafter,corpus,temperature,K,seed_count,mean_accepted,std_accepted,cost_speedup,std_speedup,acceptance_rate,tokens"
    );
    assert_eq!(csv.lines().count(), 9);
    let md = fs::read(ws.file("out/grid.md")).unwrap();
    ok(d, &["bench", "grid", "--config", "grid.conf", "--out-dir", "out"]);
    assert_eq!(csv, fs::read_to_string(ws.file("out/grid.csv")).unwrap());
    assert_eq!(md, fs::read(ws.file("out/grid.md")).unwrap());

    fs::write(
        ws.file("scaling.conf"),
        "target = target.model\ndrafter = base.model\ncorpus = de_distilled.tsv\neval = de_eval.tsv\n\
         budgets = 100, 1000, 5000\nmax_new_tokens = 24\nmax_prompts = 10\n",
    )
    .unwrap();
    let summary = ok(d, &["bench", "scaling", "--config", "scaling.conf", "--out-dir", "out"]);
    assert!(summary.starts_with("3 points"), "{summary}");
    let csv = fs::read_to_string(ws.file("out/scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(fs::read_to_string(ws.file("out/scaling.md")).unwrap().contains("spearman_log_budget_accepted"));
}

#[test]
fn route_examples() {
    let dir = tempfile::tempdir().unwrap();
    for m in ["de.model", "fr.model", "ru.model", "ja.model"] {
        fs::write(dir.path().join(m), "").unwrap();
    }
    fs::write(
        dir.path().join("registry.conf"),
        "default = de-en\n[drafters]\nde-en = de.model\nfr-en = fr.model\nru-en = ru.model\nja-en = ja.model\n",
    )
    .unwrap();
    let route = |text: &str| ok(dir.path(), &["route", "--registry", "registry.conf", "--text", text]);
    assert_eq!(route("Größe der Straße"), "de-en\n");
    assert_eq!(route("Привет мир"), "ru-en\n");
    assert_eq!(route("こんにちは世界"), "ja-en\n");
    assert_eq!(route("Bonjour le monde"), "fr-en\n");
    assert_eq!(route("12345"), "de-en\n");
    let with_path = ok(dir.path(), &["route", "--registry", "registry.conf", "--text", "Привет", "--show-path"]);
    assert!(with_path.starts_with("ru-en\t") && with_path.trim_end().ends_with("ru.model"));
}

#[test]
fn errors_have_distinct_exit_codes() {
    let ws = Workspace::new();
    let d = ws.path();

    let (code, line) = fails(d, &["decode", "--bogus"]);
    assert_eq!(code, 2);
    assert!(line.starts_with("error kind=usage code=2 message=\""), "{line}");

    let (code, line) = fails(d, &["decode", "--target", "nope.model", "--drafter", "base.model", "--prompt", "x"]);
    assert_eq!(code, 3);
    assert!(line.contains("kind=io") && line.contains("nope.model"), "{line}");

    // a drafter with its own vocabulary
    ok(d, &["train", "pretrain", "--corpus", "general.tsv", "--order", "2", "--out", "other.model"]);
    let (code, line) = fails(d, &["decode", "--target", "target.model", "--drafter", "other.model", "--prompt", "x"]);
    assert_eq!((code, line.contains("kind=vocab_mismatch")), (4, true), "{line}");

    fs::write(ws.file("broken.model"), "version=1\norder=two\n").unwrap();
    let (code, line) = fails(d, &["decode", "--target", "broken.model", "--drafter", "base.model", "--prompt", "x"]);
    assert_eq!((code, line.contains("kind=malformed")), (5, true), "{line}");

    let (code, _) = fails(d, &[
        "decode", "--target", "target.model", "--drafter", "base.model", "--prompt", "x", "--T", "-1",
    ]);
    assert_eq!(code, 6);
    let (code, _) = fails(d, &["decode", "--target", "target.model", "--drafter", "base.model", "--prompt", "x", "--K", "0"]);
    assert_eq!(code, 6);

    fs::write(ws.file("reg.conf"), "[drafters]\nru-en = base.model\n").unwrap();
    let (code, line) = fails(d, &["route", "--registry", "reg.conf", "--text", "Größe"]);
    assert_eq!((code, line.contains("kind=unknown_language")), (7, true), "{line}");

    let (code, _) = fails(d, &["bench", "grid", "--out-dir", "out"]);
    assert_eq!(code, 2);

    let help = ok(d, &["--help"]);
    assert!(help.contains("Exit codes:") && help.contains("vocabulary mismatch"));
}
