//! Word-level engagement: does a lemma draw more engagement when it is used
//! metaphorically than when it is used literally?

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{StudyConfig, WordLevelGrouping};
use super::post_level::{EngagementTable, MetricFit};
use super::record::StudyPost;
use crate::corpus::{Gender, Party};
use crate::dataset::Construction;
use crate::engagement::{EngagementVector, Metric};
use crate::error::{Error, Result};
use crate::stats::{lmm_fit, mean_ci, DesignMatrix, LmmOptions, MeanCi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaRole {
    SourceVerb,
    SourceAdjective,
    TargetNoun,
}

impl LemmaRole {
    pub const ALL: [LemmaRole; 3] = [LemmaRole::SourceVerb, LemmaRole::SourceAdjective, LemmaRole::TargetNoun];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaRole::SourceVerb => "source-verb",
            LemmaRole::SourceAdjective => "source-adjective",
            LemmaRole::TargetNoun => "target-noun",
        }
    }
}

impl fmt::Display for LemmaRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaInstance {
    pub lemma: String,
    pub role: LemmaRole,
    pub is_metaphorical: bool,
    pub post_id: String,
    pub politician_id: String,
    pub timestamp: DateTime<Utc>,
    pub word_count: usize,
    pub gender: Gender,
    pub party: Party,
    pub engagement: EngagementVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaStats {
    pub lemma: String,
    pub role: LemmaRole,
    pub metaphorical_posts: usize,
    pub literal_posts: usize,
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSelection {
    /// Every lemma × role seen, sorted by role then lemma.
    pub inventory: Vec<LemmaStats>,
    /// Instances of included lemmas only.
    pub instances: Vec<LemmaInstance>,
    /// Included lemma count per role.
    pub sizes: BTreeMap<LemmaRole, usize>,
    pub excluded_posts: usize,
}

/// Builds one instance per (post, lemma, role) from posts with at most
/// `max_post_metaphors` metaphors. An instance is metaphorical when any of
/// its pairs in that post scored at or above the threshold.
pub fn select_lemmas(posts: &[StudyPost], config: &StudyConfig) -> LemmaSelection {
    let mut instances: Vec<LemmaInstance> = Vec::new();
    let mut excluded_posts = 0;
    for post in posts {
        if post.metaphoricity > config.max_post_metaphors {
            excluded_posts += 1;
            continue;
        }
        let mut uses: BTreeMap<(LemmaRole, &str), bool> = BTreeMap::new();
        for sp in &post.pairs {
            let source = match sp.pair.construction {
                Construction::AdjNoun => LemmaRole::SourceAdjective,
                Construction::VerbSubj | Construction::VerbObj => LemmaRole::SourceVerb,
            };
            for key in [
                (source, sp.pair.governor.as_str()),
                (LemmaRole::TargetNoun, sp.pair.noun.as_str()),
            ] {
                *uses.entry(key).or_insert(false) |= sp.is_metaphor;
            }
        }
        instances.extend(uses.into_iter().map(|((role, lemma), is_metaphorical)| LemmaInstance {
            lemma: lemma.to_string(),
            role,
            is_metaphorical,
            post_id: post.post_id.clone(),
            politician_id: post.politician_id.clone(),
            timestamp: post.timestamp,
            word_count: post.word_count,
            gender: post.gender,
            party: post.party,
            engagement: post.engagement,
        }));
    }

    let mut counts: BTreeMap<(LemmaRole, String), (usize, usize)> = BTreeMap::new();
    for inst in &instances {
        let c = counts.entry((inst.role, inst.lemma.clone())).or_insert((0, 0));
        if inst.is_metaphorical {
            c.0 += 1;
        } else {
            c.1 += 1;
        }
    }
    let min = config.lemma_min_posts;
    let inventory: Vec<LemmaStats> = counts
        .into_iter()
        .map(|((role, lemma), (m, l))| LemmaStats {
            lemma,
            role,
            metaphorical_posts: m,
            literal_posts: l,
            included: m >= min && l >= min,
        })
        .collect();
    let keep: BTreeSet<(LemmaRole, &str)> = inventory
        .iter()
        .filter(|s| s.included)
        .map(|s| (s.role, s.lemma.as_str()))
        .collect();
    let mut sizes: BTreeMap<LemmaRole, usize> = LemmaRole::ALL.iter().map(|&r| (r, 0)).collect();
    for (role, _) in &keep {
        *sizes.get_mut(role).expect("all roles present") += 1;
    }
    instances.retain(|i| keep.contains(&(i.role, i.lemma.as_str())));
    instances.sort_by(|a, b| (a.role, &a.lemma, &a.post_id).cmp(&(b.role, &b.lemma, &b.post_id)));
    LemmaSelection {
        inventory,
        instances,
        sizes,
        excluded_posts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleResult {
    pub role: LemmaRole,
    pub n_lemmas: usize,
    pub n_instances: usize,
    pub table: EngagementTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaPoint {
    pub role: LemmaRole,
    pub metric: Metric,
    pub lemma: String,
    pub metaphorical: MeanCi,
    pub literal: MeanCi,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordLevelReport {
    pub grouping: WordLevelGrouping,
    pub roles: Vec<RoleResult>,
    pub point_plots: Vec<LemmaPoint>,
    pub notices: Vec<String>,
}

impl WordLevelReport {
    pub fn role(&self, role: LemmaRole) -> Option<&RoleResult> {
        self.roles.iter().find(|r| r.role == role)
    }
}

fn group_of(inst: &LemmaInstance, grouping: WordLevelGrouping) -> &str {
    match grouping {
        WordLevelGrouping::Lemma => &inst.lemma,
        WordLevelGrouping::Politician => &inst.politician_id,
    }
}

/// Mixed model `metric ~ is_metaphorical + post_length + female + democrat`
/// with a random intercept per group.
pub fn fit_word_level(
    instances: &[&LemmaInstance],
    metric: Metric,
    grouping: WordLevelGrouping,
    config: &StudyConfig,
) -> Result<MetricFit> {
    let eligible: Vec<&LemmaInstance> = instances
        .iter()
        .copied()
        .filter(|i| i.engagement.get(metric).value().is_some())
        .collect();
    if eligible.is_empty() {
        return Err(Error::InsufficientData(format!("no eligible instances for {metric}")));
    }
    let mut within: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    for i in &eligible {
        let e = within.entry(group_of(i, grouping)).or_insert((false, false));
        if i.is_metaphorical {
            e.0 = true;
        } else {
            e.1 = true;
        }
    }
    if !within.values().any(|&(m, l)| m && l) {
        return Err(Error::RankDeficient {
            columns: vec!["is_metaphorical".into()],
        });
    }
    let names = ["intercept", "is_metaphorical", "post_length", "female", "democrat"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<f64>> = eligible
        .iter()
        .map(|i| {
            vec![
                1.0,
                f64::from(u8::from(i.is_metaphorical)),
                i.word_count as f64,
                f64::from(u8::from(i.gender == Gender::Female)),
                f64::from(u8::from(i.party == Party::Democrat)),
            ]
        })
        .collect();
    let y = eligible
        .iter()
        .map(|i| i.engagement.get(metric).value().expect("eligible"))
        .collect();
    let groups: Vec<&str> = eligible.iter().map(|i| group_of(i, grouping)).collect();
    let design = DesignMatrix::new(names, &rows, y)?.with_groups(&groups)?;
    let fit = lmm_fit(
        &design,
        &LmmOptions {
            method: config.method,
            ..Default::default()
        },
    )?;
    MetricFit::from_lmm(metric, &fit, config.bonferroni_family)
}

fn point_plots(role: LemmaRole, instances: &[&LemmaInstance], top: usize) -> Vec<LemmaPoint> {
    let mut by_lemma: BTreeMap<&str, Vec<&LemmaInstance>> = BTreeMap::new();
    for i in instances {
        by_lemma.entry(i.lemma.as_str()).or_default().push(i);
    }
    let mut out = Vec::new();
    for metric in Metric::ALL {
        let mut points: Vec<LemmaPoint> = by_lemma
            .iter()
            .filter_map(|(lemma, insts)| {
                let values = |m: bool| -> Vec<f64> {
                    insts
                        .iter()
                        .filter(|i| i.is_metaphorical == m)
                        .filter_map(|i| i.engagement.get(metric).value())
                        .collect()
                };
                let met = mean_ci(&values(true), 0.95)?;
                let lit = mean_ci(&values(false), 0.95)?;
                Some(LemmaPoint {
                    role,
                    metric,
                    lemma: lemma.to_string(),
                    metaphorical: met,
                    literal: lit,
                    difference: met.mean - lit.mean,
                })
            })
            .collect();
        points.sort_by(|a, b| {
            b.difference
                .abs()
                .total_cmp(&a.difference.abs())
                .then_with(|| a.lemma.cmp(&b.lemma))
        });
        points.truncate(top);
        out.extend(points);
    }
    out
}

pub fn run_word_level_study(selection: &LemmaSelection, config: &StudyConfig) -> Result<WordLevelReport> {
    config.validate()?;
    let grouping = config.word_level_grouping;
    let mut roles = Vec::new();
    let mut plots = Vec::new();
    let mut notices = Vec::new();
    for role in LemmaRole::ALL {
        let insts: Vec<&LemmaInstance> = selection.instances.iter().filter(|i| i.role == role).collect();
        let n_lemmas = selection.sizes.get(&role).copied().unwrap_or(0);
        if insts.is_empty() {
            notices.push(format!("{role}: no qualifying lemmas, skipped"));
            continue;
        }
        let metrics = Metric::ALL
            .par_iter()
            .map(|&m| fit_word_level(&insts, m, grouping, config))
            .collect::<Result<Vec<_>>>()?;
        plots.extend(point_plots(role, &insts, config.top_lemmas));
        roles.push(RoleResult {
            role,
            n_lemmas,
            n_instances: insts.len(),
            table: EngagementTable {
                variant: role.to_string(),
                n_posts: insts.len(),
                bonferroni_family: config.bonferroni_family,
                metrics,
            },
        });
    }
    Ok(WordLevelReport {
        grouping,
        roles,
        point_plots: plots,
        notices,
    })
}
