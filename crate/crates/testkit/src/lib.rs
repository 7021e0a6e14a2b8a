//! Synthetic embeddings, pair datasets and post corpora with known structure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use metaeng::conllu::parse_conllu_document;
use metaeng::corpus::{Corpus, Gender, Party, PartyMapping, Politician, Post, Reactions};
use metaeng::dataset::{write_pair_dataset, Construction, LabeledPair};
use metaeng::embedding::EmbeddingStore;
use metaeng::engagement::reactions_start;
use metaeng::extract::ExtractOptions;
use metaeng::net::{train, Dims, ModelKind, TrainConfig, TrainedModel, DEFAULT_THRESHOLD};
use metaeng::scorer::{score_corpus, ModelPair, ScoredPost};
use metaeng::study::{join_study_posts, StudyPost};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Two labelled clusters of concatenated pair vectors: metaphorical pairs sit
/// near one pair of centres, literal pairs near another.
pub struct SeparablePairs {
    pub store: EmbeddingStore,
    pub train: Vec<LabeledPair>,
    pub dev: Vec<LabeledPair>,
    /// `(left centre, right centre)` for literal and metaphorical pairs.
    pub centres: [(Vec<f64>, Vec<f64>); 2],
}

pub fn separable_pairs(seed: u64, dim: usize, n_train: usize, n_dev: usize) -> SeparablePairs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let centre = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| 1.5 * unit.sample(rng)).collect() };
    let centres = [
        (centre(&mut rng), centre(&mut rng)),
        (centre(&mut rng), centre(&mut rng)),
    ];
    let noise = Normal::new(0.0, 0.35).expect("valid normal");
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..n_train + n_dev {
        let label = i % 2 == 1;
        let (c1, c2) = &centres[usize::from(label)];
        let left = format!("l{i:04}");
        let right = format!("r{i:04}");
        rows.push((
            left.clone(),
            c1.iter().map(|c| c + noise.sample(&mut rng)).collect::<Vec<f64>>(),
        ));
        rows.push((
            right.clone(),
            c2.iter().map(|c| c + noise.sample(&mut rng)).collect::<Vec<f64>>(),
        ));
        pairs.push(LabeledPair {
            left,
            right,
            construction: Construction::VerbObj,
            label,
        });
    }
    pairs.shuffle(&mut rng);
    let dev = pairs.split_off(n_train);
    SeparablePairs {
        store: EmbeddingStore::from_rows(rows, dim).expect("consistent rows"),
        train: pairs,
        dev,
        centres,
    }
}

/// Word classes of the synthetic lexicon. A pair is metaphorical exactly when
/// its two words come from different clusters.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub verbs: Vec<(String, bool)>,
    pub adjectives: Vec<(String, bool)>,
    pub nouns: Vec<(String, bool)>,
}

impl Lexicon {
    pub fn new(per_cluster: usize) -> Self {
        let words = |prefix: &str| -> Vec<(String, bool)> {
            (0..2 * per_cluster)
                .map(|i| {
                    let cluster = i % 2 == 1;
                    (format!("{prefix}{}{}", if cluster { "b" } else { "a" }, i / 2), cluster)
                })
                .collect()
        };
        Lexicon {
            verbs: words("verb"),
            adjectives: words("adj"),
            nouns: words("noun"),
        }
    }

    pub fn all_pairs(&self, kind: ModelKind) -> Vec<LabeledPair> {
        let (left, construction) = match kind {
            ModelKind::VerbArg => (&self.verbs, Construction::VerbObj),
            ModelKind::AdjNoun => (&self.adjectives, Construction::AdjNoun),
        };
        let mut out = Vec::new();
        for (l, lc) in left {
            for (n, nc) in &self.nouns {
                out.push(LabeledPair {
                    left: l.clone(),
                    right: n.clone(),
                    construction,
                    label: lc != nc,
                });
            }
        }
        out
    }
}

/// Embeddings where the first coordinate carries the cluster sign.
pub fn lexicon_embeddings(lexicon: &Lexicon, dim: usize, seed: u64) -> EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.3).expect("valid normal");
    let rows: Vec<(String, Vec<f64>)> = lexicon
        .verbs
        .iter()
        .chain(&lexicon.adjectives)
        .chain(&lexicon.nouns)
        .map(|(w, c)| {
            let mut v: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
            v[0] = if *c { 2.0 } else { -2.0 } + noise.sample(&mut rng) * 0.5;
            (w.clone(), v)
        })
        .chain(["we", "the", "thank", "you", "so", "much"].map(|w| (w.to_string(), vec![0.0; dim])))
        .collect();
    EmbeddingStore::from_rows(rows, dim).expect("consistent rows")
}

pub fn lexicon_train_config(kind: ModelKind, dim: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        dims: Dims::new(dim, 32, 8).expect("positive dims"),
        max_epochs: 150,
        patience: 30,
        init_scale: 0.3,
        seed,
        ..TrainConfig::for_kind(kind)
    }
}

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub politicians: usize,
    pub posts: usize,
    /// Politicians that get `short_posts` posts instead of the even share.
    pub short_politicians: usize,
    pub short_posts: usize,
    /// Probability that an unshifted post carries one metaphor.
    pub metaphor_rate: f64,
    /// Extra metaphors for Democrat posts on or after `shift_start`.
    pub shift: usize,
    pub shift_start: NaiveDate,
    /// Added to `ln(comments + 1)` per metaphorical verb pair.
    pub verb_participation_effect: f64,
    pub politician_sd: f64,
    pub noise_sd: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            politicians: 40,
            posts: 2000,
            short_politicians: 4,
            short_posts: 32,
            metaphor_rate: 0.4,
            shift: 1,
            shift_start: NaiveDate::from_ymd_opt(2016, 11, 7).expect("valid date"),
            verb_participation_effect: 0.2,
            politician_sd: 0.3,
            noise_sd: 0.5,
        }
    }
}

/// Ground truth recorded while generating a post.
#[derive(Debug, Clone, PartialEq)]
pub struct PostTruth {
    pub metaphors: usize,
    pub verb_post: bool,
}

pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub conllu: String,
    pub truth: BTreeMap<String, PostTruth>,
}

fn window_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 2, 7).expect("valid date")
}

struct Sentence {
    lemmas: Vec<String>,
    rows: Vec<(&'static str, usize, &'static str)>,
}

fn verb_sentence(verb: &str, noun: &str) -> Sentence {
    Sentence {
        lemmas: vec!["we".into(), verb.into(), "the".into(), noun.into()],
        rows: vec![
            ("PRON", 2, "nsubj"),
            ("VERB", 0, "root"),
            ("DET", 4, "det"),
            ("NOUN", 2, "obj"),
        ],
    }
}

fn adj_sentence(adj: &str, noun: &str) -> Sentence {
    Sentence {
        lemmas: vec!["the".into(), adj.into(), noun.into(), "matter".into()],
        rows: vec![
            ("DET", 3, "det"),
            ("ADJ", 3, "amod"),
            ("NOUN", 4, "nsubj"),
            ("VERB", 0, "root"),
        ],
    }
}

fn filler_sentence() -> Sentence {
    Sentence {
        lemmas: vec!["thank".into(), "you".into(), "so".into(), "much".into()],
        rows: vec![
            ("VERB", 0, "root"),
            ("PRON", 1, "obj"),
            ("ADV", 4, "advmod"),
            ("ADV", 1, "advmod"),
        ],
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &'a [(String, bool)], cluster: bool) -> &'a str {
    let pool: Vec<&'a str> = words
        .iter()
        .filter(|(_, c)| *c == cluster)
        .map(|(w, _)| w.as_str())
        .collect();
    pool[rng.random_range(0..pool.len())]
}

pub fn synthetic_corpus(spec: &CorpusSpec, lexicon: &Lexicon, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");

    let mut politicians = BTreeMap::new();
    let mut quotas = Vec::new();
    let long = spec.politicians - spec.short_politicians;
    let remaining = spec.posts - spec.short_politicians * spec.short_posts;
    for i in 0..spec.politicians {
        let id = format!("pol{i:03}");
        let party = if i % 2 == 0 { Party::Democrat } else { Party::Republican };
        let gender = if i % 10 < 3 { Gender::Female } else { Gender::Male };
        politicians.insert(
            id.clone(),
            Politician {
                politician_id: id.clone(),
                name: None,
                gender,
                party,
                effective_party: PartyMapping::default().effective(&id, party),
            },
        );
        let n = if i >= long {
            spec.short_posts
        } else {
            remaining / long + usize::from(i < remaining % long)
        };
        let offsets: [f64; 5] = std::array::from_fn(|_| spec.politician_sd * unit.sample(&mut rng));
        quotas.push((id, party, gender, n, offsets));
    }
    // Politician intercepts sum to zero within each gender × party cell,
    // weighted by post count.
    for cell in [Gender::Female, Gender::Male]
        .iter()
        .flat_map(|g| [(*g, Party::Democrat), (*g, Party::Republican)])
    {
        let members: Vec<usize> = (0..quotas.len())
            .filter(|&i| (quotas[i].2, quotas[i].1) == cell)
            .collect();
        let weight: f64 = members.iter().map(|&i| quotas[i].3 as f64).sum();
        for m in 0..5 {
            let centre = members
                .iter()
                .map(|&i| quotas[i].3 as f64 * quotas[i].4[m])
                .sum::<f64>()
                / weight;
            for &i in &members {
                quotas[i].4[m] -= centre;
            }
        }
    }

    let mut posts = Vec::new();
    let mut truth = BTreeMap::new();
    let mut conllu = String::new();
    let mut counter = 0usize;
    for (pol, party, _, n, offsets) in &quotas {
        for k in 0..*n {
            counter += 1;
            let post_id = format!("post{counter:05}");
            // stratified over the window so each politician has the same quarter mix
            let day = ((k as f64 + rng.random::<f64>()) * 366.0 / *n as f64) as i64;
            let seconds = rng.random_range(0..86_400);
            let date = window_start() + Duration::days(day);
            let timestamp =
                Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("midnight")) + Duration::seconds(seconds);

            let shifted = *party == Party::Democrat && date >= spec.shift_start;
            let metaphors = usize::from(rng.random_bool(spec.metaphor_rate)) + if shifted { spec.shift } else { 0 };
            let verb_post = rng.random_bool(0.5);
            let literal = usize::from(metaphors == 0);
            let (left_words, kind) = if verb_post {
                (&lexicon.verbs, 0)
            } else {
                (&lexicon.adjectives, 1)
            };
            let mut sentences = Vec::new();
            for m in 0..metaphors + literal {
                let cluster = rng.random_bool(0.5);
                let left = pick(&mut rng, left_words, cluster);
                let noun = pick(&mut rng, &lexicon.nouns, if m < metaphors { !cluster } else { cluster });
                sentences.push(if kind == 0 {
                    verb_sentence(left, noun)
                } else {
                    adj_sentence(left, noun)
                });
            }
            // Every sentence has four words, so post length is independent of the pairs.
            let total = rng.random_range(4..=7);
            while sentences.len() < total {
                sentences.push(filler_sentence());
            }
            sentences.shuffle(&mut rng);

            let mut text = String::new();
            let _ = writeln!(conllu, "# post_id = {post_id}");
            for (si, s) in sentences.iter().enumerate() {
                let _ = writeln!(conllu, "# sent_id = {post_id}-{}", si + 1);
                for (ti, (lemma, (upos, head, rel))) in s.lemmas.iter().zip(&s.rows).enumerate() {
                    let form = if lemma == "matter" { "matters" } else { lemma.as_str() };
                    let _ = writeln!(conllu, "{}\t{form}\t{lemma}\t{upos}\t_\t_\t{head}\t{rel}\t_\t_", ti + 1);
                    if !text.is_empty() {
                        text.push(' ');
                    }
                    text.push_str(form);
                }
                conllu.push('\n');
            }
            if sentences.is_empty() {
                conllu.push('\n');
            }

            let verb_metaphors = if verb_post { metaphors } else { 0 };
            let mut count = |base: f64, offset: f64, effect: f64| -> u64 {
                let v = base + offset + effect + spec.noise_sd * unit.sample(&mut rng);
                v.exp_m1().round().max(0.0) as u64
            };
            let comments = count(4.0, offsets[0], spec.verb_participation_effect * verb_metaphors as f64);
            let shares = count(2.5, offsets[1], 0.0);
            let likes = count(5.0, offsets[2], 0.0);
            let pos = count(2.0, offsets[3], 0.0);
            let neg = count(1.5, offsets[4], 0.0);
            let love = pos / 2;
            let haha = pos / 3;
            let angry = neg / 2;
            posts.push(Post {
                post_id: post_id.clone(),
                politician_id: pol.clone(),
                text,
                timestamp,
                reactions: Reactions {
                    comments: Some(comments),
                    shares: Some(shares),
                    likes: Some(likes),
                    love: Some(love),
                    haha: Some(haha),
                    wow: Some(pos - love - haha),
                    angry: Some(angry),
                    sad: Some(neg - angry),
                },
                post_type: None,
            });
            truth.insert(post_id, PostTruth { metaphors, verb_post });
        }
    }
    posts.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    SyntheticCorpus {
        corpus: Corpus::new(posts, politicians).expect("every post has an author"),
        conllu,
        truth,
    }
}

pub fn posts_csv(posts: &[Post]) -> String {
    let mut out = String::from("post_id,politician_id,timestamp,text,comments,shares,likes,love,haha,wow,angry,sad\n");
    let c = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in posts {
        let r = &p.reactions;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.post_id,
            p.politician_id,
            p.timestamp.to_rfc3339(),
            p.text,
            c(r.comments),
            c(r.shares),
            c(r.likes),
            c(r.love),
            c(r.haha),
            c(r.wow),
            c(r.angry),
            c(r.sad)
        );
    }
    out
}

pub fn politicians_csv(politicians: &BTreeMap<String, Politician>) -> String {
    let mut out = String::from("politician_id,name,gender,party\n");
    for p in politicians.values() {
        let gender = match p.gender {
            Gender::Male => "male",
            Gender::Female => "female",
        };
        let _ = writeln!(out, "{},,{gender},{}", p.politician_id, p.party.as_str());
    }
    out
}

/// Paths of a fixture written to disk.
pub struct FixtureFiles {
    pub embeddings: PathBuf,
    pub verb_pairs: PathBuf,
    pub adj_pairs: PathBuf,
    pub posts: PathBuf,
    pub politicians: PathBuf,
    pub parses: PathBuf,
}

pub fn write_fixture(
    dir: &Path,
    store: &EmbeddingStore,
    lexicon: &Lexicon,
    corpus: &SyntheticCorpus,
) -> io::Result<FixtureFiles> {
    fs::create_dir_all(dir)?;
    let files = FixtureFiles {
        embeddings: dir.join("embeddings.txt"),
        verb_pairs: dir.join("verb_pairs.tsv"),
        adj_pairs: dir.join("adj_pairs.tsv"),
        posts: dir.join("posts.csv"),
        politicians: dir.join("politicians.csv"),
        parses: dir.join("parses.conllu"),
    };
    let mut buf = Vec::new();
    store.write_text(&mut buf).map_err(io::Error::other)?;
    fs::write(&files.embeddings, buf)?;
    for (path, kind) in [
        (&files.verb_pairs, ModelKind::VerbArg),
        (&files.adj_pairs, ModelKind::AdjNoun),
    ] {
        let mut buf = Vec::new();
        write_pair_dataset(&lexicon.all_pairs(kind), &mut buf).map_err(io::Error::other)?;
        fs::write(path, buf)?;
    }
    fs::write(&files.posts, posts_csv(&corpus.corpus.posts))?;
    fs::write(&files.politicians, politicians_csv(&corpus.corpus.politicians))?;
    fs::write(&files.parses, &corpus.conllu)?;
    Ok(files)
}

/// Trains `(adj_noun, verb_arg)` models on every lexicon pair.
pub fn train_lexicon_models(lexicon: &Lexicon, store: &EmbeddingStore, seed: u64) -> (TrainedModel, TrainedModel) {
    let fit = |kind: ModelKind| {
        let pairs = lexicon.all_pairs(kind);
        train(
            kind,
            &pairs,
            &pairs,
            store,
            &lexicon_train_config(kind, store.dimension(), seed),
        )
        .expect("training runs")
    };
    (fit(ModelKind::AdjNoun), fit(ModelKind::VerbArg))
}

/// A scored synthetic corpus ready for the studies.
pub struct StudyFixture {
    pub lexicon: Lexicon,
    pub store: EmbeddingStore,
    pub adj_model: TrainedModel,
    pub verb_model: TrainedModel,
    pub synthetic: SyntheticCorpus,
    pub scored: Vec<ScoredPost>,
    pub posts: Vec<StudyPost>,
}

pub const LEXICON_DIM: usize = 10;

pub fn study_fixture(spec: &CorpusSpec, seed: u64) -> StudyFixture {
    let lexicon = Lexicon::new(6);
    let store = lexicon_embeddings(&lexicon, LEXICON_DIM, seed);
    let (adj_model, verb_model) = train_lexicon_models(&lexicon, &store, seed);
    let synthetic = synthetic_corpus(spec, &lexicon, seed);
    let doc = parse_conllu_document(synthetic.conllu.as_bytes()).expect("valid CoNLL-U");
    let models = ModelPair::new(&adj_model, &verb_model, &store).expect("matching models");
    let scored = score_corpus(
        &synthetic.corpus.posts,
        &doc,
        models,
        &store,
        DEFAULT_THRESHOLD,
        &ExtractOptions::default(),
    )
    .expect("scoring runs");
    let (posts, _) = join_study_posts(&synthetic.corpus, &scored, reactions_start()).expect("every post scored");
    StudyFixture {
        lexicon,
        store,
        adj_model,
        verb_model,
        synthetic,
        scored,
        posts,
    }
}
