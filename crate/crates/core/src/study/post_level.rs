//! Post-level engagement: one mixed model per metric with a random
//! intercept per politician.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::record::StudyPost;
use super::usage::control_design;
use crate::engagement::Metric;
use crate::error::{Error, Result};
use crate::stats::{bonferroni, lmm_fit, ols_fit, stars, DesignMatrix, LmmOptions, LmmResult};

/// Draws exactly `per_politician` posts from every politician with at least
/// that many; others are left out. Output is sorted by `post_id`.
pub fn balanced_sample(posts: &[StudyPost], per_politician: usize, seed: u64) -> Result<Vec<StudyPost>> {
    if per_politician == 0 {
        return Err(Error::InvalidConfig("per_politician must be at least 1".into()));
    }
    let mut by_author: BTreeMap<&str, Vec<&StudyPost>> = BTreeMap::new();
    for p in posts {
        by_author.entry(p.politician_id.as_str()).or_default().push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for group in by_author.values_mut() {
        if group.len() < per_politician {
            continue;
        }
        group.sort_by(|a, b| a.post_id.cmp(&b.post_id));
        let mut picked: Vec<usize> = sample(&mut rng, group.len(), per_politician).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| group[i].clone()));
    }
    out.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostEngagementOptions {
    /// Rerun on posts before the election only.
    pub pre_election_subset: bool,
    /// Add a post-election indicator.
    pub post_election_control: bool,
    pub party_interaction: bool,
    pub election_interaction: bool,
}

impl From<&StudyConfig> for PostEngagementOptions {
    fn from(c: &StudyConfig) -> Self {
        PostEngagementOptions {
            pre_election_subset: c.pre_election_subset,
            post_election_control: c.post_election_control,
            party_interaction: c.party_interaction,
            election_interaction: c.election_interaction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCoefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p: f64,
    pub p_bonferroni: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFit {
    pub metric: Metric,
    pub n: usize,
    pub n_groups: usize,
    pub coefficients: Vec<TableCoefficient>,
    pub sigma_group2: f64,
    pub sigma_resid2: f64,
    pub theta: f64,
    pub log_likelihood: f64,
    pub converged: bool,
}

impl MetricFit {
    pub fn coefficient(&self, name: &str) -> Option<&TableCoefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub(crate) fn from_lmm(metric: Metric, fit: &LmmResult, family: usize) -> Result<Self> {
        let coefficients = fit
            .fixed_effects
            .iter()
            .map(|c| {
                let adj = bonferroni(&[c.p], family)?[0];
                Ok(TableCoefficient {
                    name: c.name.clone(),
                    estimate: c.estimate,
                    std_error: c.std_error,
                    t: c.t,
                    p: c.p,
                    p_bonferroni: adj,
                    stars: stars(adj).to_string(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(MetricFit {
            metric,
            n: fit.n,
            n_groups: fit.n_groups,
            coefficients,
            sigma_group2: fit.sigma_group2,
            sigma_resid2: fit.sigma_resid2,
            theta: fit.theta,
            log_likelihood: fit.log_likelihood,
            converged: fit.converged,
        })
    }
}

/// One row per metric, as in a coefficient table with significance stars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementTable {
    pub variant: String,
    pub n_posts: usize,
    pub bonferroni_family: usize,
    pub metrics: Vec<MetricFit>,
}

impl EngagementTable {
    pub fn metric(&self, m: Metric) -> Option<&MetricFit> {
        self.metrics.iter().find(|f| f.metric == m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSeries {
    pub metric: Metric,
    pub intercept: f64,
    pub slope: f64,
    /// `(metaphoricity_norm, metric value)` per eligible post.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostEngagementReport {
    pub n_posts: usize,
    pub n_politicians: usize,
    pub main: EngagementTable,
    pub pre_election: Option<EngagementTable>,
    pub post_election_control: Option<EngagementTable>,
    pub party_interaction: Option<EngagementTable>,
    pub election_interaction: Option<EngagementTable>,
    pub regression_plots: Vec<RegressionSeries>,
}

type Column<'a> = (&'a str, &'a (dyn Fn(&StudyPost) -> f64 + Sync));

fn fit_table(
    variant: &str,
    posts: &[&StudyPost],
    focal: &[Column<'_>],
    config: &StudyConfig,
) -> Result<EngagementTable> {
    if posts.is_empty() {
        return Err(Error::Empty("post sample"));
    }
    let options = LmmOptions {
        method: config.method,
        ..Default::default()
    };
    let metrics = Metric::ALL
        .par_iter()
        .map(|&metric| {
            let eligible: Vec<&StudyPost> = posts
                .iter()
                .copied()
                .filter(|p| p.engagement.get(metric).value().is_some())
                .collect();
            if eligible.is_empty() {
                return Err(Error::InsufficientData(format!("no eligible posts for {metric}")));
            }
            let design = metric_design(&eligible, focal, metric)?;
            let fit = lmm_fit(&design, &options)?;
            MetricFit::from_lmm(metric, &fit, config.bonferroni_family)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EngagementTable {
        variant: variant.to_string(),
        n_posts: posts.len(),
        bonferroni_family: config.bonferroni_family,
        metrics,
    })
}

fn metric_design(posts: &[&StudyPost], focal: &[Column<'_>], metric: Metric) -> Result<DesignMatrix> {
    let design = control_design(posts, focal, |p| p.engagement.get(metric).value().expect("eligible"))?;
    let groups: Vec<&str> = posts.iter().map(|p| p.politician_id.as_str()).collect();
    design.with_groups(&groups)
}

pub fn run_post_engagement_study(
    sample: &[StudyPost],
    options: &PostEngagementOptions,
    config: &StudyConfig,
) -> Result<PostEngagementReport> {
    config.validate()?;
    if sample.is_empty() {
        return Err(Error::Empty("post sample"));
    }
    let posts: Vec<&StudyPost> = sample.iter().collect();
    let election = config.election_date;
    let metaphoricity = |p: &StudyPost| p.metaphoricity as f64;
    let post_election = move |p: &StudyPost| f64::from(u8::from(p.date() >= election));
    let party_x = |p: &StudyPost| p.democrat() * p.metaphoricity as f64;
    let election_x = move |p: &StudyPost| post_election(p) * p.metaphoricity as f64;

    let main = fit_table("main", &posts, &[("metaphoricity", &metaphoricity)], config)?;
    let pre_election = if options.pre_election_subset {
        let end = config.pre_election_end();
        let subset: Vec<&StudyPost> = posts.iter().copied().filter(|p| p.date() < end).collect();
        Some(fit_table(
            "pre_election",
            &subset,
            &[("metaphoricity", &metaphoricity)],
            config,
        )?)
    } else {
        None
    };
    let post_election_control = if options.post_election_control {
        Some(fit_table(
            "post_election_control",
            &posts,
            &[("metaphoricity", &metaphoricity), ("post_election", &post_election)],
            config,
        )?)
    } else {
        None
    };
    let party_interaction = if options.party_interaction {
        Some(fit_table(
            "party_interaction",
            &posts,
            &[("metaphoricity", &metaphoricity), ("democrat:metaphoricity", &party_x)],
            config,
        )?)
    } else {
        None
    };
    let election_interaction = if options.election_interaction {
        Some(fit_table(
            "election_interaction",
            &posts,
            &[
                ("metaphoricity", &metaphoricity),
                ("post_election", &post_election),
                ("post_election:metaphoricity", &election_x),
            ],
            config,
        )?)
    } else {
        None
    };

    let regression_plots = Metric::ALL
        .iter()
        .filter_map(|&metric| {
            let points: Vec<(f64, f64)> = posts
                .iter()
                .filter_map(|p| p.engagement.get(metric).value().map(|v| (p.metaphoricity_norm, v)))
                .collect();
            let rows: Vec<Vec<f64>> = points.iter().map(|&(x, _)| vec![1.0, x]).collect();
            let d = DesignMatrix::new(
                vec!["intercept".into(), "metaphoricity_norm".into()],
                &rows,
                points.iter().map(|&(_, y)| y).collect(),
            )
            .ok()?;
            let fit = ols_fit(&d).ok()?;
            Some(RegressionSeries {
                metric,
                intercept: fit.coefficients[0].estimate,
                slope: fit.coefficients[1].estimate,
                points,
            })
        })
        .collect();

    let mut politicians: Vec<&str> = posts.iter().map(|p| p.politician_id.as_str()).collect();
    politicians.sort_unstable();
    politicians.dedup();
    Ok(PostEngagementReport {
        n_posts: posts.len(),
        n_politicians: politicians.len(),
        main,
        pre_election,
        post_election_control,
        party_interaction,
        election_interaction,
        regression_plots,
    })
}
