//! Report files. Names are fixed; content depends only on the inputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::post_level::{EngagementTable, PostEngagementReport};
use super::usage::UsageReport;
use super::word_level::{LemmaSelection, WordLevelReport};
use crate::error::Result;

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    written.push(path);
    Ok(())
}

fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    written.push(path);
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn emit_usage_report(report: &UsageReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    write_csv(
        dir,
        "usage_boxplots.csv",
        &[
            "factor",
            "level",
            "n",
            "mean",
            "min",
            "q1",
            "median",
            "q3",
            "max",
            "lower_whisker",
            "upper_whisker",
            "outliers",
        ],
        report.boxplots.iter().map(|b| {
            let s = &b.summary;
            vec![
                b.factor.clone(),
                b.level.clone(),
                s.n.to_string(),
                s.mean.to_string(),
                s.min.to_string(),
                s.q1.to_string(),
                s.median.to_string(),
                s.q3.to_string(),
                s.max.to_string(),
                s.lower_whisker.to_string(),
                s.upper_whisker.to_string(),
                s.outliers.to_string(),
            ]
        }),
        &mut written,
    )?;
    write_csv(
        dir,
        "quarter_trends.csv",
        &["party", "quarter", "n", "mean", "ci_lower", "ci_upper"],
        report.quarter_trends.iter().map(|t| {
            vec![
                t.party.as_str().to_string(),
                t.quarter.to_string(),
                t.n.to_string(),
                opt(t.mean),
                opt(t.ci_lower),
                opt(t.ci_upper),
            ]
        }),
        &mut written,
    )?;
    #[derive(Serialize)]
    struct Anova<'a> {
        n_in_window: usize,
        one_way_quarter: &'a Option<crate::stats::AnovaTable>,
        two_way_party_quarter: &'a Option<crate::stats::AnovaTable>,
        notices: &'a [String],
    }
    write_json(
        dir,
        "anova.json",
        &Anova {
            n_in_window: report.n_in_window,
            one_way_quarter: &report.anova_quarter,
            two_way_party_quarter: &report.anova_party_quarter,
            notices: &report.notices,
        },
        &mut written,
    )?;
    if let Some(t) = &report.tukey {
        write_csv(
            dir,
            "tukey.csv",
            &[
                "group_a",
                "group_b",
                "mean_diff",
                "q",
                "p_adj",
                "p_unadjusted",
                "significant",
            ],
            t.comparisons.iter().map(|c| {
                vec![
                    c.group_a.clone(),
                    c.group_b.clone(),
                    c.mean_diff.to_string(),
                    c.q.to_string(),
                    c.p_adj.to_string(),
                    c.p_unadjusted.to_string(),
                    c.significant.to_string(),
                ]
            }),
            &mut written,
        )?;
    }
    #[derive(Serialize)]
    struct Regression<'a> {
        n_posts: usize,
        ols: &'a Option<crate::stats::RegressionResult>,
        lmm: &'a Option<crate::stats::LmmResult>,
    }
    write_json(
        dir,
        "usage_regression.json",
        &Regression {
            n_posts: report.n_posts,
            ols: &report.ols,
            lmm: &report.lmm,
        },
        &mut written,
    )?;
    Ok(written)
}

fn table_rows<'a>(tables: impl IntoIterator<Item = &'a EngagementTable>) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for t in tables {
        for m in &t.metrics {
            for c in &m.coefficients {
                rows.push(vec![
                    t.variant.clone(),
                    m.metric.to_string(),
                    c.name.clone(),
                    c.estimate.to_string(),
                    c.std_error.to_string(),
                    c.t.to_string(),
                    c.p.to_string(),
                    c.p_bonferroni.to_string(),
                    c.stars.clone(),
                    m.n.to_string(),
                ]);
            }
        }
    }
    rows
}

const TABLE_HEADER: [&str; 10] = [
    "variant",
    "metric",
    "coefficient",
    "estimate",
    "std_error",
    "t",
    "p",
    "p_bonferroni",
    "stars",
    "n",
];

pub fn emit_post_engagement_report(report: &PostEngagementReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let tables: Vec<&EngagementTable> = std::iter::once(&report.main)
        .chain(report.pre_election.as_ref())
        .chain(report.post_election_control.as_ref())
        .chain(report.party_interaction.as_ref())
        .chain(report.election_interaction.as_ref())
        .collect();
    #[derive(Serialize)]
    struct Tables<'a> {
        n_posts: usize,
        n_politicians: usize,
        tables: &'a [&'a EngagementTable],
    }
    write_json(
        dir,
        "post_engagement_table.json",
        &Tables {
            n_posts: report.n_posts,
            n_politicians: report.n_politicians,
            tables: &tables,
        },
        &mut written,
    )?;
    write_csv(
        dir,
        "post_engagement_table.csv",
        &TABLE_HEADER,
        table_rows(tables.iter().copied()),
        &mut written,
    )?;
    write_csv(
        dir,
        "regression_plots.csv",
        &["metric", "metaphoricity_norm", "value"],
        report.regression_plots.iter().flat_map(|s| {
            s.points
                .iter()
                .map(move |(x, y)| vec![s.metric.to_string(), x.to_string(), y.to_string()])
        }),
        &mut written,
    )?;
    write_csv(
        dir,
        "regression_lines.csv",
        &["metric", "intercept", "slope"],
        report
            .regression_plots
            .iter()
            .map(|s| vec![s.metric.to_string(), s.intercept.to_string(), s.slope.to_string()]),
        &mut written,
    )?;
    Ok(written)
}

pub fn emit_word_level_report(
    report: &WordLevelReport,
    selection: &LemmaSelection,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    write_json(dir, "wordlevel_table.json", report, &mut written)?;
    write_csv(
        dir,
        "wordlevel_table.csv",
        &TABLE_HEADER,
        table_rows(report.roles.iter().map(|r| &r.table)),
        &mut written,
    )?;
    write_csv(
        dir,
        "lemma_pointplots.csv",
        &[
            "role",
            "metric",
            "lemma",
            "difference",
            "metaphorical_n",
            "metaphorical_mean",
            "metaphorical_lower",
            "metaphorical_upper",
            "literal_n",
            "literal_mean",
            "literal_lower",
            "literal_upper",
        ],
        report.point_plots.iter().map(|p| {
            vec![
                p.role.to_string(),
                p.metric.to_string(),
                p.lemma.clone(),
                p.difference.to_string(),
                p.metaphorical.n.to_string(),
                p.metaphorical.mean.to_string(),
                p.metaphorical.lower.to_string(),
                p.metaphorical.upper.to_string(),
                p.literal.n.to_string(),
                p.literal.mean.to_string(),
                p.literal.lower.to_string(),
                p.literal.upper.to_string(),
            ]
        }),
        &mut written,
    )?;
    write_csv(
        dir,
        "lemma_inventory.csv",
        &["role", "lemma", "metaphorical_posts", "literal_posts", "included"],
        selection.inventory.iter().map(|s| {
            vec![
                s.role.to_string(),
                s.lemma.clone(),
                s.metaphorical_posts.to_string(),
                s.literal_posts.to_string(),
                s.included.to_string(),
            ]
        }),
        &mut written,
    )?;
    Ok(written)
}
