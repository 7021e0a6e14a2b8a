use std::collections::HashMap;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Gender, Party};
use crate::engagement::{compute_engagement_with_cutoff, EngagementVector};
use crate::error::{Error, Result};
use crate::scorer::{ScoredPair, ScoredPost};

/// A post joined with its author, its metaphor score and its engagement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPost {
    pub post_id: String,
    pub politician_id: String,
    pub timestamp: DateTime<Utc>,
    pub gender: Gender,
    /// Democrat or Republican after the independent mapping.
    pub party: Party,
    pub word_count: usize,
    pub metaphoricity: usize,
    pub metaphoricity_norm: f64,
    pub pairs: Vec<ScoredPair>,
    pub engagement: EngagementVector,
}

impl StudyPost {
    pub fn female(&self) -> f64 {
        f64::from(u8::from(self.gender == Gender::Female))
    }

    pub fn democrat(&self) -> f64 {
        f64::from(u8::from(self.party == Party::Democrat))
    }

    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinSummary {
    pub joined: usize,
    /// Posts whose author has no Democrat/Republican assignment.
    pub excluded_party: usize,
}

/// Joins every corpus post with its score. Output follows corpus order
/// (sorted by `post_id`).
pub fn join_study_posts(
    corpus: &Corpus,
    scored: &[ScoredPost],
    reactions_start: NaiveDate,
) -> Result<(Vec<StudyPost>, JoinSummary)> {
    let by_id: HashMap<&str, &ScoredPost> = scored.iter().map(|s| (s.post_id.as_str(), s)).collect();
    let mut out = Vec::with_capacity(corpus.posts.len());
    let mut summary = JoinSummary::default();
    for post in &corpus.posts {
        let s = by_id
            .get(post.post_id.as_str())
            .ok_or_else(|| Error::InsufficientData(format!("post {} has no score", post.post_id)))?;
        let author = corpus.politician_of(post);
        let party = match author.effective_party {
            Some(p @ (Party::Democrat | Party::Republican)) => p,
            _ => {
                summary.excluded_party += 1;
                continue;
            }
        };
        out.push(StudyPost {
            post_id: post.post_id.clone(),
            politician_id: post.politician_id.clone(),
            timestamp: post.timestamp,
            gender: author.gender,
            party,
            word_count: s.word_count,
            metaphoricity: s.metaphoricity,
            metaphoricity_norm: s.metaphoricity_norm,
            pairs: s.pairs.clone(),
            engagement: compute_engagement_with_cutoff(post, reactions_start),
        });
    }
    summary.joined = out.len();
    Ok((out, summary))
}
