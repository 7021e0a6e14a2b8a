use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use metaeng::conllu::{parse_conllu_document, ParsedDocument};
use metaeng::corpus::{load_post_corpus, load_posts, text_only, Corpus, PartyMapping, Post, TableFormat};
use metaeng::dataset::{load_pair_dataset, LabeledPair};
use metaeng::embedding::{load_embeddings, EmbeddingStore};
use metaeng::engagement::{compute_engagement, write_engagement_csv};
use metaeng::extract::{extract_all, write_candidates, ExtractOptions};
use metaeng::net::{
    evaluate, train, write_training_log, DevMetric, Dims, EmbeddingRef, Metrics, ModelKind, TrainConfig, TrainedModel,
    EVAL_THRESHOLD,
};
use metaeng::scorer::{corpus_summary, read_scored, score_corpus, write_scored, ModelPair, ScoredPost};
use metaeng::study::{
    balanced_sample, emit_post_engagement_report, emit_usage_report, emit_word_level_report, join_study_posts,
    run_post_engagement_study, run_usage_study, run_word_level_study, select_lemmas, JoinSummary, PostEngagementReport,
    StudyConfig, StudyPost, UsageReport, WordLevelReport,
};
use serde::Serialize;

use crate::args::{ConstructionArg, DevMetricArg, EvalArgs, ExtractArgs, ScoreArgs, StudyArgs, TrainArgs};
use crate::error::{CliError, CliResult};
use crate::run::{sha256_hex, Run};

fn kind_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::AdjNoun => "adj-noun",
        ModelKind::VerbArg => "verb-arg",
    }
}

fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn load_store(run: &mut Run, path: &Path, expected_dim: Option<usize>) -> CliResult<(EmbeddingStore, String)> {
    let bytes = run.read("embeddings", path)?;
    let hash = sha256_hex(&bytes);
    let store = load_embeddings(bytes.as_slice(), expected_dim).map_err(|e| CliError::input(path, e))?;
    Ok((store, hash))
}

fn load_pairs(run: &mut Run, role: &str, path: &Path, kind: ModelKind) -> CliResult<Vec<LabeledPair>> {
    let bytes = run.read(role, path)?;
    load_pair_dataset(bytes.as_slice(), Some(kind)).map_err(|e| CliError::input(path, e))
}

fn load_model(run: &mut Run, role: &str, path: &Path) -> CliResult<TrainedModel> {
    let bytes = run.read(role, path)?;
    TrainedModel::read_json(bytes.as_slice()).map_err(|e| CliError::input(path, e))
}

/// Loads the embeddings given on the command line or recorded in the models,
/// checking recorded hashes.
fn model_store(run: &mut Run, explicit: Option<&Path>, models: &[&TrainedModel]) -> CliResult<EmbeddingStore> {
    let refs: Vec<&EmbeddingRef> = models.iter().filter_map(|m| m.embeddings.as_ref()).collect();
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let first = refs
                .first()
                .ok_or_else(|| CliError::Usage("--embeddings is required: the model records no embeddings".into()))?;
            if refs.iter().any(|r| r.path != first.path) {
                return Err(CliError::Usage(
                    "models reference different embeddings; pass --embeddings".into(),
                ));
            }
            PathBuf::from(&first.path)
        }
    };
    let dim = models.first().map(|m| m.params.dims.embedding);
    let (store, hash) = load_store(run, &path, dim)?;
    if refs.iter().any(|r| r.sha256 != hash) {
        return Err(CliError::EmbeddingHash(path));
    }
    Ok(store)
}

#[derive(Serialize)]
struct TrainManifest<'a> {
    args: &'a TrainArgs,
    resolved: &'a TrainConfig,
}

pub fn train_cmd(args: &TrainArgs, out: &Path) -> CliResult<()> {
    let kind = match args.construction {
        ConstructionArg::Verb => ModelKind::VerbArg,
        ConstructionArg::Adj => ModelKind::AdjNoun,
    };
    Run::require("train", &args.train)?;
    Run::require("dev", &args.dev)?;
    Run::require("embeddings", &args.embeddings)?;
    if let Some(test) = &args.test {
        Run::require("test", test)?;
    }
    let mut run = Run::new("train", out);
    let (store, hash) = load_store(&mut run, &args.embeddings, None)?;
    let train_set = load_pairs(&mut run, "train", &args.train, kind)?;
    let dev_set = load_pairs(&mut run, "dev", &args.dev, kind)?;
    let test_set = match &args.test {
        Some(p) => Some(load_pairs(&mut run, "test", p, kind)?),
        None => None,
    };
    let config = TrainConfig {
        dims: Dims::new(store.dimension(), args.mapped, args.hidden)?,
        margin: args.margin,
        max_epochs: args.max_epochs,
        patience: args.patience,
        batch_size: args.batch_size,
        adadelta_rho: args.rho,
        adadelta_eps: args.eps,
        init_scale: args.init_scale,
        seed: args.seed,
        dev_metric: match args.dev_metric {
            Some(DevMetricArg::Accuracy) => DevMetric::Accuracy,
            Some(DevMetricArg::F1) => DevMetric::F1,
            None => kind.default_dev_metric(),
        },
    };
    let mut model = train(kind, &train_set, &dev_set, &store, &config)?;
    model.embeddings = Some(EmbeddingRef {
        path: args.embeddings.display().to_string(),
        sha256: hash,
    });

    let name = kind_name(kind);
    let mut buf = Vec::new();
    model.write_json(&mut buf)?;
    run.write(&format!("model-{name}.json"), &buf)?;
    let mut log = Vec::new();
    write_training_log(&model.log, &mut log)?;
    run.write(&format!("training_log-{name}.jsonl"), &log)?;
    if let Some(test_set) = test_set {
        let report = EvalReport::new(kind, evaluate(&model, &test_set, &store)?);
        run.write(&format!("eval-{name}.json"), &json_bytes(&report)?)?;
    }
    run.finish(
        Some(args.seed),
        &TrainManifest {
            args,
            resolved: &config,
        },
    )
}

#[derive(Serialize)]
struct EvalReport {
    kind: ModelKind,
    threshold: f64,
    metrics: Metrics,
}

impl EvalReport {
    fn new(kind: ModelKind, metrics: Metrics) -> Self {
        EvalReport {
            kind,
            threshold: EVAL_THRESHOLD,
            metrics,
        }
    }
}

pub fn eval_cmd(args: &EvalArgs, out: &Path) -> CliResult<()> {
    Run::require("model", &args.model)?;
    Run::require("test", &args.test)?;
    let mut run = Run::new("eval", out);
    let model = load_model(&mut run, "model", &args.model)?;
    let store = model_store(&mut run, args.embeddings.as_deref(), &[&model])?;
    let test_set = load_pairs(&mut run, "test", &args.test, model.kind)?;
    let report = EvalReport::new(model.kind, evaluate(&model, &test_set, &store)?);
    run.write(&format!("eval-{}.json", kind_name(model.kind)), &json_bytes(&report)?)?;
    run.finish(None, args)
}

fn load_parses(run: &mut Run, path: &Path) -> CliResult<ParsedDocument> {
    let bytes = run.read("parses", path)?;
    parse_conllu_document(bytes.as_slice()).map_err(|e| CliError::input(path, e))
}

#[derive(Serialize)]
struct ExtractSummary {
    sentences: usize,
    posts: usize,
    pairs: usize,
    by_construction: BTreeMap<String, usize>,
}

pub fn extract_cmd(args: &ExtractArgs, out: &Path) -> CliResult<()> {
    Run::require("parses", &args.parses)?;
    let mut run = Run::new("extract", out);
    let doc = load_parses(&mut run, &args.parses)?;
    let opts = ExtractOptions {
        include_pronouns: args.include_pronouns,
        include_copular: !args.no_copular,
    };
    let pairs = extract_all(&doc.sentences, &opts);
    let mut buf = Vec::new();
    write_candidates(&pairs, &mut buf)?;
    run.write("candidates.tsv", &buf)?;
    let mut by_construction = BTreeMap::new();
    for p in &pairs {
        *by_construction.entry(p.construction.as_str().to_string()).or_insert(0) += 1;
    }
    let summary = ExtractSummary {
        sentences: doc.sentences.len(),
        posts: doc.post_ids.len(),
        pairs: pairs.len(),
        by_construction,
    };
    run.write("extract_summary.json", &json_bytes(&summary)?)?;
    run.finish(None, args)
}

fn load_post_table(run: &mut Run, path: &Path, all_types: bool) -> CliResult<Vec<Post>> {
    let bytes = run.read("corpus", path)?;
    let mut posts = load_posts(bytes.as_slice(), TableFormat::from_path(path)).map_err(|e| CliError::input(path, e))?;
    if !all_types {
        posts.retain(text_only);
    }
    Ok(posts)
}

pub fn score_cmd(args: &ScoreArgs, out: &Path) -> CliResult<()> {
    for (role, path) in [
        ("model-adj", &args.model_adj),
        ("model-verb", &args.model_verb),
        ("parses", &args.parses),
        ("corpus", &args.corpus),
    ] {
        Run::require(role, path)?;
    }
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CliError::Usage(format!(
            "threshold {} is outside [0, 1]",
            args.threshold
        )));
    }
    let mut run = Run::new("score", out);
    let adj = load_model(&mut run, "model-adj", &args.model_adj)?;
    let verb = load_model(&mut run, "model-verb", &args.model_verb)?;
    let store = model_store(&mut run, args.embeddings.as_deref(), &[&adj, &verb])?;
    let models = ModelPair::new(&adj, &verb, &store)?;
    let doc = load_parses(&mut run, &args.parses)?;
    let posts = load_post_table(&mut run, &args.corpus, args.all_post_types)?;
    let opts = ExtractOptions {
        include_pronouns: args.include_pronouns,
        include_copular: !args.no_copular,
    };
    let scored = score_corpus(&posts, &doc, models, &store, args.threshold, &opts)?;

    let mut buf = Vec::new();
    write_scored(&scored, &mut buf)?;
    run.write("scored.jsonl", &buf)?;
    run.write("corpus_summary.json", &json_bytes(&corpus_summary(&scored)?)?)?;
    let rows: Vec<(&str, _)> = posts
        .iter()
        .map(|p| (p.post_id.as_str(), compute_engagement(p)))
        .collect();
    let mut csv = Vec::new();
    write_engagement_csv(&rows, &mut csv)?;
    run.write("engagement.csv", &csv)?;
    run.finish(None, args)
}

struct StudyInputs {
    config: StudyConfig,
    posts: Vec<StudyPost>,
    join: JoinSummary,
}

#[derive(Serialize)]
struct StudyManifest<'a> {
    args: &'a StudyArgs,
    resolved: &'a StudyConfig,
}

fn load_study(run: &mut Run, args: &StudyArgs) -> CliResult<StudyInputs> {
    Run::require("scored", &args.scored)?;
    Run::require("corpus", &args.corpus)?;
    Run::require("politicians", &args.politicians)?;
    if let Some(c) = &args.config {
        Run::require("config", c)?;
    }
    let mut config = match &args.config {
        Some(path) => {
            let bytes = run.read("config", path)?;
            let text = String::from_utf8(bytes).map_err(|e| CliError::Config {
                path: path.clone(),
                message: e.to_string(),
            })?;
            toml::from_str::<StudyConfig>(&text).map_err(|e| CliError::Config {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => StudyConfig::default(),
    };
    if let Some(t) = args.threshold {
        config.threshold = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let scored_bytes = run.read("scored", &args.scored)?;
    let scored: Vec<ScoredPost> = read_scored(scored_bytes.as_slice())
        .map_err(|e| CliError::input(&args.scored, e))?
        .iter()
        .map(|s| s.with_threshold(config.threshold))
        .collect();
    let posts_bytes = run.read("corpus", &args.corpus)?;
    let pol_bytes = run.read("politicians", &args.politicians)?;
    let keep = |p: &Post| text_only(p);
    let filter: Option<&dyn Fn(&Post) -> bool> = if args.all_post_types { None } else { Some(&keep) };
    let corpus: Corpus = load_post_corpus(
        posts_bytes.as_slice(),
        TableFormat::from_path(&args.corpus),
        pol_bytes.as_slice(),
        TableFormat::from_path(&args.politicians),
        &PartyMapping::default(),
        filter,
    )
    .map_err(|e| CliError::input(&args.corpus, e))?;
    let (posts, join) = join_study_posts(&corpus, &scored, config.reactions_start)?;
    Ok(StudyInputs { config, posts, join })
}

/// Emits into a staging directory, then copies through `run` so every file
/// is hashed and checked against the inputs.
fn stage<F>(run: &mut Run, emit: F) -> CliResult<()>
where
    F: FnOnce(&Path) -> metaeng::Result<Vec<PathBuf>>,
{
    let staging = run.out_dir().join(".staging");
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| CliError::io(&staging, e))?;
    }
    let paths = emit(&staging)?;
    for p in paths {
        let bytes = fs::read(&p).map_err(|e| CliError::io(&p, e))?;
        let name = p.file_name().expect("emitted file name").to_string_lossy().into_owned();
        run.write(&name, &bytes)?;
    }
    fs::remove_dir_all(&staging).map_err(|e| CliError::io(&staging, e))?;
    Ok(())
}

fn usage(run: &mut Run, inputs: &StudyInputs) -> CliResult<UsageReport> {
    let report = run_usage_study(&inputs.posts, &inputs.config)?;
    stage(run, |dir| emit_usage_report(&report, dir))?;
    Ok(report)
}

fn engagement(run: &mut Run, inputs: &StudyInputs) -> CliResult<PostEngagementReport> {
    let c = &inputs.config;
    let sample = balanced_sample(&inputs.posts, c.per_politician, c.seed)?;
    if sample.is_empty() {
        return Err(CliError::Usage(format!(
            "no politician has {} posts; lower per_politician",
            c.per_politician
        )));
    }
    let report = run_post_engagement_study(&sample, &c.into(), c)?;
    stage(run, |dir| emit_post_engagement_report(&report, dir))?;
    Ok(report)
}

fn word_level(run: &mut Run, inputs: &StudyInputs) -> CliResult<WordLevelReport> {
    let selection = select_lemmas(&inputs.posts, &inputs.config);
    let report = run_word_level_study(&selection, &inputs.config)?;
    stage(run, |dir| emit_word_level_report(&report, &selection, dir))?;
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub enum Study {
    Usage,
    Engagement,
    WordLevel,
    All,
}

pub fn study_cmd(study: Study, args: &StudyArgs, out: &Path) -> CliResult<()> {
    let name = match study {
        Study::Usage => "study-usage",
        Study::Engagement => "study-engagement",
        Study::WordLevel => "study-wordlevel",
        Study::All => "report",
    };
    let mut run = Run::new(name, out);
    let inputs = load_study(&mut run, args)?;
    run.write("join_summary.json", &json_bytes(&inputs.join)?)?;
    match study {
        Study::Usage => {
            usage(&mut run, &inputs)?;
        }
        Study::Engagement => {
            engagement(&mut run, &inputs)?;
        }
        Study::WordLevel => {
            word_level(&mut run, &inputs)?;
        }
        Study::All => {
            let u = usage(&mut run, &inputs)?;
            let e = engagement(&mut run, &inputs)?;
            let w = word_level(&mut run, &inputs)?;
            run.write("report.md", summary_markdown(&inputs, &u, &e, &w).as_bytes())?;
        }
    }
    run.finish(
        Some(inputs.config.seed),
        &StudyManifest {
            args,
            resolved: &inputs.config,
        },
    )
}

fn summary_markdown(inputs: &StudyInputs, u: &UsageReport, e: &PostEngagementReport, w: &WordLevelReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Metaphor and engagement report\n");
    let _ = writeln!(
        s,
        "Posts joined: {} (excluded without a two-party affiliation: {}). Threshold {}.\n",
        inputs.join.joined, inputs.join.excluded_party, inputs.config.threshold
    );
    let _ = writeln!(s, "## Usage\n");
    if let Some(ols) = &u.ols {
        let _ = writeln!(s, "| term | estimate | SE | p |\n|---|---|---|---|");
        for c in &ols.coefficients {
            let _ = writeln!(
                s,
                "| {} | {:.4} | {:.4} | {:.3e} |",
                c.name, c.estimate, c.std_error, c.p
            );
        }
        s.push('\n');
    }
    if let Some(t) = &u.tukey {
        let _ = writeln!(
            s,
            "Tukey HSD at alpha {}: {} significant pairs; groups differing from all others: {}.\n",
            t.alpha,
            t.significant_pairs().count(),
            list(&t.isolated_groups())
        );
    }
    let _ = writeln!(s, "## Post-level engagement\n");
    let _ = writeln!(
        s,
        "{} posts from {} politicians.\n\n| metric | metaphoricity | SE | p (Bonferroni) |\n|---|---|---|---|",
        e.n_posts, e.n_politicians
    );
    for m in &e.main.metrics {
        if let Some(c) = m.coefficient("metaphoricity") {
            let _ = writeln!(
                s,
                "| {} | {:.4} | {:.4} | {:.3e}{} |",
                m.metric, c.estimate, c.std_error, c.p_bonferroni, c.stars
            );
        }
    }
    let _ = writeln!(s, "\n## Word-level engagement\n");
    let _ = writeln!(
        s,
        "| role | metric | lemmas | is_metaphorical | SE | p (Bonferroni) |\n|---|---|---|---|---|---|"
    );
    for r in &w.roles {
        for m in &r.table.metrics {
            if let Some(c) = m.coefficient("is_metaphorical") {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {:.4} | {:.4} | {:.3e}{} |",
                    r.role, m.metric, r.n_lemmas, c.estimate, c.std_error, c.p_bonferroni, c.stars
                );
            }
        }
    }
    for n in u.notices.iter().chain(&w.notices) {
        let _ = writeln!(s, "\nNote: {n}");
    }
    s
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(", ")
    }
}
