#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use metaeng_testkit::{
    lexicon_embeddings, synthetic_corpus, write_fixture, CorpusSpec, FixtureFiles, Lexicon, LEXICON_DIM,
};

pub fn metaeng(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metaeng"))
        .args(args)
        .env_remove("METAENG_OUT_DIR")
        .output()
        .expect("binary runs")
}

/// Runs a subcommand that must succeed.
pub fn ok(args: &[&str]) {
    let out = metaeng(args);
    assert!(
        out.status.success(),
        "metaeng {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

pub const STUDY_CONFIG: &str = "per_politician = 40\n";

pub struct Pipeline {
    pub files: FixtureFiles,
    pub config: PathBuf,
    pub models: PathBuf,
    pub scored: PathBuf,
    pub report: PathBuf,
}

pub fn train_args<'a>(
    construction: &'a str,
    pairs: &'a str,
    emb: &'a str,
    seed: &'a str,
    out: &'a str,
) -> Vec<&'a str> {
    vec![
        "train",
        "--construction",
        construction,
        "--train",
        pairs,
        "--dev",
        pairs,
        "--embeddings",
        emb,
        "--seed",
        seed,
        "--mapped",
        "32",
        "--hidden",
        "8",
        "--max-epochs",
        "150",
        "--patience",
        "30",
        "--init-scale",
        "0.3",
        "--out",
        out,
    ]
}

/// Writes the synthetic fixture for `seed` and runs train, score and report.
pub fn pipeline(root: &Path, seed: u64) -> Pipeline {
    let lexicon = Lexicon::new(6);
    let store = lexicon_embeddings(&lexicon, LEXICON_DIM, seed);
    let corpus = synthetic_corpus(&CorpusSpec::default(), &lexicon, seed);
    let files = write_fixture(&root.join("data"), &store, &lexicon, &corpus).expect("fixture written");
    let config = root.join("data/study.toml");
    fs::write(&config, STUDY_CONFIG).unwrap();
    let models = root.join("models");
    let scored = root.join("scored");
    let report = root.join("report");
    let seed_s = seed.to_string();
    ok(&train_args(
        "verb",
        p(&files.verb_pairs),
        p(&files.embeddings),
        &seed_s,
        p(&models),
    ));
    ok(&train_args(
        "adj",
        p(&files.adj_pairs),
        p(&files.embeddings),
        &seed_s,
        p(&models),
    ));
    ok(&[
        "score",
        "--model-adj",
        p(&models.join("model-adj-noun.json")),
        "--model-verb",
        p(&models.join("model-verb-arg.json")),
        "--parses",
        p(&files.parses),
        "--corpus",
        p(&files.posts),
        "--out",
        p(&scored),
    ]);
    ok(&[
        "report",
        "--scored",
        p(&scored.join("scored.jsonl")),
        "--corpus",
        p(&files.posts),
        "--politicians",
        p(&files.politicians),
        "--config",
        p(&config),
        "--seed",
        &seed_s,
        "--out",
        p(&report),
    ]);
    Pipeline {
        files,
        config,
        models,
        scored,
        report,
    }
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

/// Rows of a CSV file keyed by header name.
pub fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

/// Every file in `dir`, by name.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            );
        }
    }
    out
}
