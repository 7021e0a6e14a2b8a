//! Applies both classifiers to every post and counts metaphors.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conllu::{ParsedDocument, ParsedSentence};
use crate::corpus::Post;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::extract::{extract_pairs, CandidatePair, ExtractOptions};
use crate::net::{ModelKind, PairScore, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    #[serde(flatten)]
    pub pair: CandidatePair,
    pub score: f64,
    pub is_metaphor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPost {
    pub post_id: String,
    /// Number of pairs classified metaphorical.
    pub metaphoricity: usize,
    pub word_count: usize,
    /// `metaphoricity / word_count`, 0 for empty posts.
    pub metaphoricity_norm: f64,
    /// Candidate pairs skipped because a word is out of vocabulary.
    pub oov_skipped: usize,
    /// No parse was available for this post.
    pub parse_missing: bool,
    pub pairs: Vec<ScoredPair>,
}

impl ScoredPost {
    fn from_pairs(
        post_id: String,
        word_count: usize,
        pairs: Vec<ScoredPair>,
        oov_skipped: usize,
        parse_missing: bool,
    ) -> Self {
        let metaphoricity = pairs.iter().filter(|p| p.is_metaphor).count();
        ScoredPost {
            post_id,
            metaphoricity,
            word_count,
            metaphoricity_norm: if word_count == 0 {
                0.0
            } else {
                metaphoricity as f64 / word_count as f64
            },
            oov_skipped,
            parse_missing,
            pairs,
        }
    }

    /// Re-applies a different threshold to the stored scores.
    pub fn with_threshold(&self, threshold: f64) -> ScoredPost {
        let pairs = self
            .pairs
            .iter()
            .map(|p| ScoredPair {
                is_metaphor: p.score >= threshold,
                ..p.clone()
            })
            .collect();
        ScoredPost::from_pairs(
            self.post_id.clone(),
            self.word_count,
            pairs,
            self.oov_skipped,
            self.parse_missing,
        )
    }
}

/// The adjective–noun and verb–argument classifiers, applied together.
#[derive(Debug, Clone, Copy)]
pub struct ModelPair<'a> {
    pub adj_noun: &'a TrainedModel,
    pub verb_arg: &'a TrainedModel,
}

impl<'a> ModelPair<'a> {
    pub fn new(adj_noun: &'a TrainedModel, verb_arg: &'a TrainedModel, store: &EmbeddingStore) -> Result<Self> {
        for (m, want) in [(adj_noun, ModelKind::AdjNoun), (verb_arg, ModelKind::VerbArg)] {
            if m.kind != want {
                return Err(Error::InvalidConfig(format!(
                    "expected a {want:?} model, got {:?}",
                    m.kind
                )));
            }
            if m.params.dims.embedding != store.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: m.params.dims.embedding,
                    found: store.dimension(),
                });
            }
        }
        Ok(ModelPair { adj_noun, verb_arg })
    }

    fn for_kind(&self, kind: ModelKind) -> &'a TrainedModel {
        match kind {
            ModelKind::AdjNoun => self.adj_noun,
            ModelKind::VerbArg => self.verb_arg,
        }
    }
}

pub fn score_post(
    post: &Post,
    sentences: &[&ParsedSentence],
    models: ModelPair<'_>,
    store: &EmbeddingStore,
    threshold: f64,
    opts: &ExtractOptions,
) -> Result<ScoredPost> {
    let mut pairs = Vec::new();
    let mut oov = 0;
    for sentence in sentences {
        for mut cand in extract_pairs(sentence, opts) {
            cand.post_id = Some(post.post_id.clone());
            let model = models.for_kind(cand.construction.model_kind());
            match model.classify(&cand.governor, &cand.noun, store, threshold)? {
                PairScore::Scored { score, is_metaphor } => pairs.push(ScoredPair {
                    pair: cand,
                    score,
                    is_metaphor,
                }),
                PairScore::OutOfVocabulary(_) => oov += 1,
            }
        }
    }
    Ok(ScoredPost::from_pairs(
        post.post_id.clone(),
        post.word_count(),
        pairs,
        oov,
        false,
    ))
}

/// Scores every post against the sentences tagged with its id. Posts without
/// parses get zero candidates and are flagged. Output is sorted by `post_id`.
pub fn score_corpus(
    posts: &[Post],
    parses: &ParsedDocument,
    models: ModelPair<'_>,
    store: &EmbeddingStore,
    threshold: f64,
    opts: &ExtractOptions,
) -> Result<Vec<ScoredPost>> {
    let mut by_post: HashMap<&str, Vec<&ParsedSentence>> = HashMap::new();
    for s in &parses.sentences {
        if let Some(id) = &s.post_id {
            by_post.entry(id.as_str()).or_default().push(s);
        }
    }
    let mut scored = posts
        .par_iter()
        .map(|post| {
            let sentences = by_post.get(post.post_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let mut sp = score_post(post, sentences, models, store, threshold, opts)?;
            sp.parse_missing = sentences.is_empty() && !parses.post_ids.contains(&post.post_id);
            Ok(sp)
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    Ok(scored)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub posts: usize,
    pub nonzero_posts: usize,
    pub nonzero_share: f64,
    /// Metaphoricity value → number of posts.
    pub histogram: BTreeMap<usize, usize>,
    /// Among posts with non-zero metaphoricity, the share with 1 to 3 metaphors.
    pub share_1_to_3_among_nonzero: Option<f64>,
    pub candidate_pairs: usize,
    pub metaphorical_pairs: usize,
    pub oov_skipped: usize,
    pub parse_missing: usize,
}

pub fn corpus_summary(scored: &[ScoredPost]) -> Result<CorpusSummary> {
    if scored.is_empty() {
        return Err(Error::Empty("scored corpus"));
    }
    let mut histogram = BTreeMap::new();
    for p in scored {
        *histogram.entry(p.metaphoricity).or_insert(0) += 1;
    }
    let nonzero = scored.iter().filter(|p| p.metaphoricity > 0).count();
    let in_range = scored.iter().filter(|p| (1..=3).contains(&p.metaphoricity)).count();
    Ok(CorpusSummary {
        posts: scored.len(),
        nonzero_posts: nonzero,
        nonzero_share: nonzero as f64 / scored.len() as f64,
        histogram,
        share_1_to_3_among_nonzero: (nonzero > 0).then(|| in_range as f64 / nonzero as f64),
        candidate_pairs: scored.iter().map(|p| p.pairs.len()).sum(),
        metaphorical_pairs: scored.iter().map(|p| p.metaphoricity).sum(),
        oov_skipped: scored.iter().map(|p| p.oov_skipped).sum(),
        parse_missing: scored.iter().filter(|p| p.parse_missing).count(),
    })
}

pub fn write_scored<W: Write>(scored: &[ScoredPost], mut out: W) -> Result<()> {
    for p in scored {
        serde_json::to_writer(&mut out, p)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_scored<R: BufRead>(input: R) -> Result<Vec<ScoredPost>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(i + 1, e.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::parse_conllu_document;
    use crate::corpus::Reactions;
    use crate::dataset::Construction;
    use crate::net::{Dims, ModelParams};
    use chrono::TimeZone;

    fn post(id: &str, text: &str) -> Post {
        Post {
            post_id: id.into(),
            politician_id: "a".into(),
            text: text.into(),
            timestamp: chrono::Utc.with_ymd_and_hms(2016, 6, 1, 0, 0, 0).unwrap(),
            reactions: Reactions::default(),
            post_type: None,
        }
    }

    fn scored_pair(score: f64, threshold: f64) -> ScoredPair {
        ScoredPair {
            pair: CandidatePair {
                governor: "g".into(),
                noun: "n".into(),
                construction: Construction::VerbObj,
                governor_index: 1,
                noun_index: 2,
                post_id: None,
                sentence_id: "1".into(),
                copular: false,
            },
            score,
            is_metaphor: score >= threshold,
        }
    }

    #[test]
    fn count_rule() {
        let pairs = [0.80, 0.65, 0.90].iter().map(|&s| scored_pair(s, 0.7)).collect();
        let sp = ScoredPost::from_pairs("p".into(), 20, pairs, 0, false);
        assert_eq!(sp.metaphoricity, 2);
        assert!((sp.metaphoricity_norm - 0.1).abs() < 1e-15);
        assert_eq!(sp.with_threshold(0.85).metaphoricity, 1);
        assert_eq!(sp.with_threshold(0.5).metaphoricity, 3);
    }

    #[test]
    fn no_candidates() {
        let sp = ScoredPost::from_pairs("p".into(), 0, vec![], 0, false);
        assert_eq!(sp.metaphoricity, 0);
        assert_eq!(sp.metaphoricity_norm, 0.0);
    }

    #[test]
    fn summary_counts() {
        let scored: Vec<ScoredPost> = [0usize, 0, 1, 2, 3, 5]
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let pairs = (0..m).map(|_| scored_pair(0.9, 0.7)).collect();
                ScoredPost::from_pairs(format!("p{i}"), 10, pairs, 0, false)
            })
            .collect();
        let s = corpus_summary(&scored).unwrap();
        assert!((s.nonzero_share - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(s.share_1_to_3_among_nonzero, Some(0.75));
        assert_eq!(s.metaphorical_pairs, 11);
        assert!(corpus_summary(&[]).is_err());

        let zeros: Vec<ScoredPost> = (0..3)
            .map(|i| ScoredPost::from_pairs(format!("z{i}"), 5, vec![], 0, false))
            .collect();
        let z = corpus_summary(&zeros).unwrap();
        assert_eq!(z.nonzero_share, 0.0);
        assert_eq!(z.share_1_to_3_among_nonzero, None);
    }

    #[test]
    fn scores_with_both_models_and_skips_oov() {
        let store = EmbeddingStore::from_rows(
            [
                ("blind", vec![1.0, 0.0]),
                ("hope", vec![0.0, 1.0]),
                ("remain", vec![0.5, 0.5]),
            ],
            2,
        )
        .unwrap();
        let dims = Dims::new(2, 3, 2).unwrap();
        let mut adj = TrainedModel::from_params(ModelKind::AdjNoun, ModelParams::zeros(dims));
        adj.params.output_bias = 3.0; // every adjective pair ≈ 0.95
        let verb = TrainedModel::from_params(ModelKind::VerbArg, ModelParams::zeros(dims)); // 0.5
        let models = ModelPair::new(&adj, &verb, &store).unwrap();
        let doc = parse_conllu_document(
            "# post_id = p1\n1\tBlind\tblind\tADJ\t_\t_\t2\tamod\t_\t_\n2\thope\thope\tNOUN\t_\t_\t3\tnsubj\t_\t_\n3\tremains\tremain\tVERB\t_\t_\t0\troot\t_\t_\n\n1\tBig\tbig\tADJ\t_\t_\t2\tamod\t_\t_\n2\tdog\tdog\tNOUN\t_\t_\t0\troot\t_\t_\n"
                .as_bytes(),
        )
        .unwrap();
        let posts = vec![post("p1", "Blind hope remains. Big dog"), post("p2", "unparsed")];
        let scored = score_corpus(&posts, &doc, models, &store, 0.7, &ExtractOptions::default()).unwrap();
        assert_eq!(scored[0].pairs.len(), 2);
        assert_eq!(scored[0].metaphoricity, 1);
        assert_eq!(scored[0].oov_skipped, 1);
        assert_eq!(scored[0].word_count, 5);
        assert!(!scored[0].parse_missing);
        assert!(scored[1].parse_missing);
        assert_eq!(scored[1].metaphoricity, 0);

        // dimension mismatch is rejected up front
        let small = EmbeddingStore::from_rows([("x", vec![1.0])], 1).unwrap();
        assert!(ModelPair::new(&adj, &verb, &small).is_err());

        // scoring is pure
        let again = score_corpus(&posts, &doc, models, &store, 0.7, &ExtractOptions::default()).unwrap();
        assert_eq!(scored, again);

        let mut buf = Vec::new();
        write_scored(&scored, &mut buf).unwrap();
        assert_eq!(read_scored(buf.as_slice()).unwrap(), scored);
    }
}
