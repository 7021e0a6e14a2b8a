mod common;

use std::fs;
use std::process::Command;

use common::*;
use sha2::{Digest, Sha256};

const PARSES: &str = "\
# post_id = p1
# sent_id = p1-1
# text = We must stop stifling growth
1\tWe\twe\tPRON\t_\t_\t4\tnsubj\t_\t_
2\tmust\tmust\tAUX\t_\t_\t4\taux\t_\t_
3\tstop\tstop\tVERB\t_\t_\t4\txcomp\t_\t_
4\tstifling\tstifle\tVERB\t_\t_\t0\troot\t_\t_
5\tgrowth\tgrowth\tNOUN\t_\t_\t4\tdobj\t_\t_

# post_id = p2
# sent_id = p2-1
# text = Blind hope is dangerous
1\tBlind\tblind\tADJ\t_\t_\t2\tamod\t_\t_
2\thope\thope\tNOUN\t_\t_\t4\tnsubj\t_\t_
3\tis\tbe\tAUX\t_\t_\t4\tcop\t_\t_
4\tdangerous\tdangerous\tADJ\t_\t_\t0\troot\t_\t_

";

#[test]
fn unknown_subcommand_exits_2() {
    let out = metaeng(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = metaeng(&["extract", "--parses", "x", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_input_exits_1_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.conllu");
    let out = metaeng(&["extract", "--parses", p(&missing), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(p(&missing)), "{stderr}");
    assert!(stderr.contains("\"error\":\"missing_input\""), "{stderr}");
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn extract_hand_written_parses() {
    let dir = tempfile::tempdir().unwrap();
    let parses = dir.path().join("parses.conllu");
    fs::write(&parses, PARSES).unwrap();
    let out = dir.path().join("out");
    ok(&["extract", "--parses", p(&parses), "--out", p(&out)]);
    let tsv = fs::read_to_string(out.join("candidates.tsv")).unwrap();
    let rows: Vec<Vec<&str>> = tsv.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    let mut pairs: Vec<(&str, &str, &str, &str)> = rows.iter().map(|r| (r[0], r[2], r[3], r[4])).collect();
    pairs.sort();
    assert_eq!(
        pairs,
        vec![
            ("p1", "verb-obj", "stifle", "growth"),
            ("p2", "adj-noun", "blind", "hope"),
            ("p2", "adj-noun", "dangerous", "hope"),
        ]
    );
    let summary = read_json(&out.join("extract_summary.json"));
    assert_eq!(summary["posts"], 2);
    assert_eq!(summary["pairs"], 3);

    let no_cop = dir.path().join("no_cop");
    ok(&["extract", "--parses", p(&parses), "--no-copular", "--out", p(&no_cop)]);
    assert_eq!(read_json(&no_cop.join("extract_summary.json"))["pairs"], 2);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let parses = dir.path().join("parses.conllu");
    fs::write(&parses, PARSES).unwrap();
    let out = dir.path().join("env_out");
    let status = Command::new(env!("CARGO_BIN_EXE_metaeng"))
        .args(["extract", "--parses", p(&parses)])
        .env("METAENG_OUT_DIR", &out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("candidates.tsv").is_file());
}

#[test]
fn manifest_records_input_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let parses = dir.path().join("parses.conllu");
    fs::write(&parses, PARSES).unwrap();
    let out = dir.path().join("out");
    ok(&["extract", "--parses", p(&parses), "--out", p(&out)]);
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["subcommand"], "extract");
    let expected = hex(&Sha256::digest(PARSES.as_bytes()));
    assert_eq!(m["inputs"][0]["sha256"], expected.as_str());
    assert_eq!(m["inputs"][0]["role"], "parses");
    let tsv = fs::read(out.join("candidates.tsv")).unwrap();
    let listed = m["outputs"].as_array().unwrap();
    let entry = listed.iter().find(|o| o["file"] == "candidates.tsv").unwrap();
    assert_eq!(entry["sha256"], hex(&Sha256::digest(&tsv)).as_str());
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn refuses_to_overwrite_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let parses = dir.path().join("candidates.tsv");
    fs::write(&parses, PARSES).unwrap();
    let out = metaeng(&["extract", "--parses", p(&parses), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(fs::read_to_string(&parses).unwrap(), PARSES);
}

#[test]
fn pipeline_leaves_inputs_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let before: Vec<(String, Vec<u8>)> = {
        let pl = pipeline(dir.path(), 11);
        [
            &pl.files.embeddings,
            &pl.files.verb_pairs,
            &pl.files.adj_pairs,
            &pl.files.posts,
            &pl.files.politicians,
            &pl.files.parses,
        ]
        .iter()
        .map(|f| (p(f).to_string(), fs::read(f).unwrap()))
        .collect()
    };
    // rerun everything against the same inputs
    let pl = pipeline(dir.path(), 11);
    for (path, bytes) in &before {
        assert_eq!(&fs::read(path).unwrap(), bytes, "{path}");
    }
    let summary = read_json(&pl.scored.join("corpus_summary.json"));
    assert_eq!(summary["posts"], 2000);
    assert_eq!(summary["parse_missing"], 0);
    for name in [
        "usage_regression.json",
        "post_engagement_table.json",
        "wordlevel_table.json",
        "report.md",
        "tukey.csv",
    ] {
        assert!(pl.report.join(name).is_file(), "{name}");
    }
    assert!(!pl.report.join(".staging").exists());
}

#[test]
fn score_checks_embedding_hash() {
    let dir = tempfile::tempdir().unwrap();
    let pl = pipeline(dir.path(), 12);
    let tampered = dir.path().join("other.txt");
    let text = fs::read_to_string(&pl.files.embeddings).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[1].push('1');
    fs::write(&tampered, lines.join("\n") + "\n").unwrap();
    let model = fs::read_to_string(pl.models.join("model-verb-arg.json")).unwrap();
    let moved = model.replace(p(&pl.files.embeddings), p(&tampered));
    let model_path = dir.path().join("moved.json");
    fs::write(&model_path, moved).unwrap();
    let out = metaeng(&[
        "eval",
        "--model",
        p(&model_path),
        "--test",
        p(&pl.files.verb_pairs),
        "--out",
        p(&dir.path().join("e")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("embedding_hash_mismatch"), "{stderr}");
}

#[test]
fn eval_reports_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let pl = pipeline(dir.path(), 13);
    let out = dir.path().join("eval");
    ok(&[
        "eval",
        "--model",
        p(&pl.models.join("model-adj-noun.json")),
        "--test",
        p(&pl.files.adj_pairs),
        "--out",
        p(&out),
    ]);
    let e = read_json(&out.join("eval-adj-noun.json"));
    assert_eq!(e["threshold"], 0.5);
    assert_eq!(e["metrics"]["n"], 144);
    assert_eq!(e["metrics"]["accuracy"], 1.0);
}

#[test]
fn invalid_study_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let pl = pipeline(dir.path(), 14);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "per_politican = 40\n").unwrap();
    let out = metaeng(&[
        "study-usage",
        "--scored",
        p(&pl.scored.join("scored.jsonl")),
        "--corpus",
        p(&pl.files.posts),
        "--politicians",
        p(&pl.files.politicians),
        "--config",
        p(&bad),
        "--out",
        p(&dir.path().join("u")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid_config"));
}

#[test]
fn threshold_override_changes_counts() {
    let dir = tempfile::tempdir().unwrap();
    let pl = pipeline(dir.path(), 15);
    let strict = dir.path().join("strict");
    ok(&[
        "study-usage",
        "--scored",
        p(&pl.scored.join("scored.jsonl")),
        "--corpus",
        p(&pl.files.posts),
        "--politicians",
        p(&pl.files.politicians),
        "--config",
        p(&pl.config),
        "--threshold",
        "1.0",
        "--out",
        p(&strict),
    ]);
    let m = read_json(&strict.join("manifest.json"));
    assert_eq!(m["config"]["resolved"]["threshold"], 1.0);
    let rows = read_csv(&strict.join("usage_boxplots.csv"));
    assert!(rows.iter().all(|r| r["max"] == "0"), "{rows:?}");
}
