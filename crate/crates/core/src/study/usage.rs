//! Metaphor usage across gender, party and the quarters around the election.

use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::quarter::Quarter;
use super::record::StudyPost;
use crate::corpus::{Gender, Party};
use crate::error::{Error, Result};
use crate::stats::{
    anova_one_way, anova_two_way, boxplot, lmm_fit, mean_ci, ols_fit, tukey_hsd, AnovaTable, BoxplotSummary,
    DesignMatrix, LmmOptions, LmmResult, RegressionResult, SumOfSquares, TukeyResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub factor: String,
    pub level: String,
    pub summary: BoxplotSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterTrend {
    pub party: Party,
    pub quarter: Quarter,
    pub n: usize,
    pub mean: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageReport {
    pub n_posts: usize,
    pub n_in_window: usize,
    pub boxplots: Vec<BoxplotRow>,
    /// metaphoricity ~ post_length + female + democrat.
    pub ols: Option<RegressionResult>,
    /// Same fixed effects with a random intercept per politician.
    pub lmm: Option<LmmResult>,
    pub quarter_trends: Vec<QuarterTrend>,
    pub anova_quarter: Option<AnovaTable>,
    pub anova_party_quarter: Option<AnovaTable>,
    pub tukey: Option<TukeyResult>,
    pub notices: Vec<String>,
}

pub(crate) type Focal<'a> = (&'a str, &'a (dyn Fn(&StudyPost) -> f64 + Sync));

pub(crate) fn control_design(
    posts: &[&StudyPost],
    focal: &[Focal<'_>],
    response: impl Fn(&StudyPost) -> f64,
) -> Result<DesignMatrix> {
    let mut names = vec!["intercept".to_string()];
    names.extend(focal.iter().map(|(n, _)| n.to_string()));
    names.extend(["post_length", "female", "democrat"].map(String::from));
    let rows: Vec<Vec<f64>> = posts
        .iter()
        .map(|p| {
            let mut r = vec![1.0];
            r.extend(focal.iter().map(|(_, f)| f(p)));
            r.extend([p.word_count as f64, p.female(), p.democrat()]);
            r
        })
        .collect();
    DesignMatrix::new(names, &rows, posts.iter().map(|p| response(p)).collect())
}

fn record<T>(notices: &mut Vec<String>, what: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            notices.push(format!("{what}: {e}"));
            None
        }
    }
}

pub fn run_usage_study(posts: &[StudyPost], config: &StudyConfig) -> Result<UsageReport> {
    config.validate()?;
    if posts.is_empty() {
        return Err(Error::Empty("study posts"));
    }
    let mut notices = Vec::new();
    let metaphoricity = |p: &StudyPost| p.metaphoricity as f64;

    let mut boxplots = Vec::new();
    for (level, g) in [("male", Gender::Male), ("female", Gender::Female)] {
        let v: Vec<f64> = posts.iter().filter(|p| p.gender == g).map(metaphoricity).collect();
        match boxplot(&v) {
            Some(summary) => boxplots.push(BoxplotRow {
                factor: "gender".into(),
                level: level.into(),
                summary,
            }),
            None => notices.push(format!("no posts for gender {level}")),
        }
    }
    for party in [Party::Democrat, Party::Republican] {
        let v: Vec<f64> = posts.iter().filter(|p| p.party == party).map(metaphoricity).collect();
        match boxplot(&v) {
            Some(summary) => boxplots.push(BoxplotRow {
                factor: "party".into(),
                level: party.as_str().into(),
                summary,
            }),
            None => notices.push(format!("no posts for party {}", party.as_str())),
        }
    }

    let all: Vec<&StudyPost> = posts.iter().collect();
    let design = control_design(&all, &[], metaphoricity)?;
    let ols = record(&mut notices, "length-controlled OLS", ols_fit(&design));
    let grouped = design.with_groups(&all.iter().map(|p| p.politician_id.as_str()).collect::<Vec<_>>())?;
    let lmm = record(
        &mut notices,
        "length-controlled mixed model",
        lmm_fit(
            &grouped,
            &LmmOptions {
                method: config.method,
                ..Default::default()
            },
        ),
    );

    let windowed: Vec<(&StudyPost, Quarter)> = posts
        .iter()
        .filter_map(|p| config.quarters.assign(p.timestamp).map(|q| (p, q)))
        .collect();
    let mut quarter_trends = Vec::new();
    let mut cell_groups = Vec::new();
    for party in [Party::Democrat, Party::Republican] {
        for q in Quarter::ALL {
            let v: Vec<f64> = windowed
                .iter()
                .filter(|(p, pq)| p.party == party && *pq == q)
                .map(|(p, _)| metaphoricity(p))
                .collect();
            let ci = mean_ci(&v, 0.95);
            quarter_trends.push(QuarterTrend {
                party,
                quarter: q,
                n: v.len(),
                mean: ci.map(|c| c.mean),
                ci_lower: ci.map(|c| c.lower),
                ci_upper: ci.map(|c| c.upper),
            });
            if v.is_empty() {
                notices.push(format!("no posts for {}:{}", party.as_str(), q));
            } else {
                cell_groups.push((format!("{}:{}", party.as_str(), q), v));
            }
        }
    }

    let by_quarter: Vec<(String, Vec<f64>)> = Quarter::ALL
        .iter()
        .map(|&q| {
            let v = windowed
                .iter()
                .filter(|(_, pq)| *pq == q)
                .map(|(p, _)| metaphoricity(p))
                .collect();
            (q.to_string(), v)
        })
        .filter(|(_, v): &(String, Vec<f64>)| !v.is_empty())
        .collect();
    let anova_quarter = record(&mut notices, "one-way ANOVA over quarters", anova_one_way(&by_quarter));

    let values: Vec<f64> = windowed.iter().map(|(p, _)| metaphoricity(p)).collect();
    let parties: Vec<&str> = windowed.iter().map(|(p, _)| p.party.as_str()).collect();
    let quarters: Vec<&str> = windowed.iter().map(|(_, q)| q.as_str()).collect();
    let anova_party_quarter = record(
        &mut notices,
        "two-way ANOVA party x quarter",
        anova_two_way(
            &values,
            &parties,
            &quarters,
            ("party", "quarter"),
            true,
            SumOfSquares::TypeII,
        ),
    );
    let tukey = record(&mut notices, "Tukey HSD", tukey_hsd(&cell_groups, config.alpha));

    Ok(UsageReport {
        n_posts: posts.len(),
        n_in_window: windowed.len(),
        boxplots,
        ols,
        lmm,
        quarter_trends,
        anova_quarter,
        anova_party_quarter,
        tukey,
        notices,
    })
}
