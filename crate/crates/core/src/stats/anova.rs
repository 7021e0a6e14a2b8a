use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::design::dependent_columns;
use super::ols::least_squares;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub effect: String,
    pub df: usize,
    pub sum_sq: f64,
    pub mean_sq: f64,
    /// `None` on the residual row.
    pub f: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub effects: Vec<AnovaRow>,
    pub residual: AnovaRow,
    pub total_sum_sq: f64,
}

impl AnovaTable {
    pub fn effect(&self, name: &str) -> Option<&AnovaRow> {
        self.effects.iter().find(|r| r.effect == name)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumOfSquares {
    /// Sequential: first factor, then second given first, then interaction.
    TypeI,
    /// Each main effect adjusted for the other; interaction for both.
    #[default]
    TypeII,
}

/// Treats SS within rounding distance of zero as exactly zero.
fn snap(ss: f64, scale: f64) -> f64 {
    if ss <= 1e-20 * scale.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        ss
    }
}

fn f_test(ss: f64, df: usize, msr: f64, df_resid: usize) -> (f64, f64) {
    let ms = ss / df as f64;
    if ss == 0.0 {
        (0.0, 1.0)
    } else if msr == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = ms / msr;
        let dist = FisherSnedecor::new(df as f64, df_resid as f64).expect("positive df");
        (f, dist.sf(f).clamp(0.0, 1.0))
    }
}

fn effect_row(name: &str, ss: f64, df: usize, msr: f64, df_resid: usize) -> AnovaRow {
    let (f, p) = f_test(ss, df, msr, df_resid);
    AnovaRow {
        effect: name.to_string(),
        df,
        sum_sq: ss,
        mean_sq: ss / df as f64,
        f: Some(f),
        p: Some(p),
    }
}

fn residual_row(ss: f64, df: usize) -> AnovaRow {
    AnovaRow {
        effect: "residual".into(),
        df,
        sum_sq: ss,
        mean_sq: ss / df as f64,
        f: None,
        p: None,
    }
}

pub fn anova_one_way(groups: &[(String, Vec<f64>)]) -> Result<AnovaTable> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData("one-way ANOVA needs at least 2 groups".into()));
    }
    if let Some((name, _)) = groups.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::InsufficientData(format!("group {name} has no observations")));
    }
    let n: usize = groups.iter().map(|(_, v)| v.len()).sum();
    let k = groups.len();
    if n <= k {
        return Err(Error::InsufficientData("no residual degrees of freedom".into()));
    }
    let all = groups.iter().flat_map(|(_, v)| v.iter());
    let grand = all.clone().sum::<f64>() / n as f64;
    let scale: f64 = all.clone().map(|x| x * x).sum();
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for (_, v) in groups {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        ssb += v.len() as f64 * (m - grand).powi(2);
        ssw += v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let (ssb, ssw) = (snap(ssb, scale), snap(ssw, scale));
    let df_resid = n - k;
    let msr = ssw / df_resid as f64;
    Ok(AnovaTable {
        effects: vec![effect_row("group", ssb, k - 1, msr, df_resid)],
        residual: residual_row(ssw, df_resid),
        total_sum_sq: all.map(|x| (x - grand).powi(2)).sum(),
    })
}

/// Treatment-coded indicator columns (first level is the reference).
fn indicators(codes: &[usize], levels: usize) -> Vec<Vec<f64>> {
    (1..levels)
        .map(|l| codes.iter().map(|&c| f64::from(u8::from(c == l))).collect())
        .collect()
}

fn rss(columns: &[Vec<f64>], y: &DVector<f64>) -> Result<(f64, usize)> {
    let n = y.len();
    let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let dependent = dependent_columns(&x);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient {
            columns: dependent.iter().map(|j| format!("column {j}")).collect(),
        });
    }
    let ls = least_squares(&x, y)?;
    let resid = y - &x * &ls.beta;
    Ok((resid.norm_squared(), columns.len()))
}

/// Two-factor ANOVA on possibly unbalanced data, fitted by comparing nested
/// least-squares models.
pub fn anova_two_way<A: AsRef<str>, B: AsRef<str>>(
    values: &[f64],
    factor_a: &[A],
    factor_b: &[B],
    names: (&str, &str),
    include_interaction: bool,
    ss_type: SumOfSquares,
) -> Result<AnovaTable> {
    let n = values.len();
    if factor_a.len() != n || factor_b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: factor_a.len().min(factor_b.len()),
        });
    }
    let levels_a: BTreeSet<&str> = factor_a.iter().map(|s| s.as_ref()).collect();
    let levels_b: BTreeSet<&str> = factor_b.iter().map(|s| s.as_ref()).collect();
    for (name, levels) in [(names.0, &levels_a), (names.1, &levels_b)] {
        if levels.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "factor {name} has fewer than 2 levels"
            )));
        }
    }
    let code = |levels: &BTreeSet<&str>, s: &str| levels.iter().position(|l| *l == s).expect("level present");
    let ca: Vec<usize> = factor_a.iter().map(|s| code(&levels_a, s.as_ref())).collect();
    let cb: Vec<usize> = factor_b.iter().map(|s| code(&levels_b, s.as_ref())).collect();
    let (la, lb) = (levels_a.len(), levels_b.len());

    if include_interaction {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (&a, &b) in ca.iter().zip(&cb) {
            *counts.entry((a, b)).or_insert(0) += 1;
        }
        let la_names: Vec<&str> = levels_a.iter().copied().collect();
        let lb_names: Vec<&str> = levels_b.iter().copied().collect();
        let empty: Vec<String> = (0..la)
            .flat_map(|a| (0..lb).map(move |b| (a, b)))
            .filter(|cell| !counts.contains_key(cell))
            .map(|(a, b)| format!("{}:{}", la_names[a], lb_names[b]))
            .collect();
        if !empty.is_empty() {
            return Err(Error::EmptyCells(empty));
        }
    }

    let y = DVector::from_row_slice(values);
    let intercept = vec![1.0; n];
    let cols_a = indicators(&ca, la);
    let cols_b = indicators(&cb, lb);
    let cols_ab: Vec<Vec<f64>> = cols_a
        .iter()
        .flat_map(|a| {
            cols_b
                .iter()
                .map(move |b| a.iter().zip(b).map(|(x, y)| x * y).collect())
        })
        .collect();
    let model = |parts: &[&[Vec<f64>]]| -> Result<(f64, usize)> {
        let mut cols = vec![intercept.clone()];
        for p in parts {
            cols.extend(p.iter().cloned());
        }
        rss(&cols, &y)
    };

    let scale: f64 = values.iter().map(|v| v * v).sum();
    let (rss_0, _) = model(&[])?;
    let (rss_a, _) = model(&[&cols_a])?;
    let (rss_b, _) = model(&[&cols_b])?;
    let (rss_ab, p_ab) = model(&[&cols_a, &cols_b])?;
    let (rss_full, p_full) = if include_interaction {
        model(&[&cols_a, &cols_b, &cols_ab])?
    } else {
        (rss_ab, p_ab)
    };
    if n <= p_full {
        return Err(Error::InsufficientData("no residual degrees of freedom".into()));
    }
    let df_resid = n - p_full;
    let ss_resid = snap(rss_full.max(0.0), scale);
    let msr = ss_resid / df_resid as f64;
    let ss_a = match ss_type {
        SumOfSquares::TypeI => rss_0 - rss_a,
        SumOfSquares::TypeII => rss_b - rss_ab,
    };
    let ss_b = rss_a - rss_ab;
    let mut effects = vec![
        effect_row(names.0, snap(ss_a.max(0.0), scale), la - 1, msr, df_resid),
        effect_row(names.1, snap(ss_b.max(0.0), scale), lb - 1, msr, df_resid),
    ];
    if include_interaction {
        let ss_int = snap((rss_ab - rss_full).max(0.0), scale);
        effects.push(effect_row(
            &format!("{}:{}", names.0, names.1),
            ss_int,
            (la - 1) * (lb - 1),
            msr,
            df_resid,
        ));
    }
    Ok(AnovaTable {
        effects,
        residual: residual_row(ss_resid, df_resid),
        total_sum_sq: rss_0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ols::two_sided_p;

    fn groups(data: &[&[f64]]) -> Vec<(String, Vec<f64>)> {
        data.iter()
            .enumerate()
            .map(|(i, v)| (format!("g{i}"), v.to_vec()))
            .collect()
    }

    #[test]
    fn identical_means() {
        let t = anova_one_way(&groups(&[&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]])).unwrap();
        assert_eq!(t.effects[0].f, Some(0.0));
        assert_eq!(t.effects[0].p, Some(1.0));
        let flat = anova_one_way(&groups(&[&[0.1; 3], &[0.1; 4]])).unwrap();
        assert_eq!(flat.effects[0].f, Some(0.0));
    }

    #[test]
    fn two_groups_is_t_squared() {
        let a = [4.1, 5.3, 6.0, 5.5, 4.9];
        let b = [6.2, 7.1, 5.9, 6.8];
        let t = anova_one_way(&groups(&[&a, &b])).unwrap();
        // pooled two-sample t
        let ma = a.iter().sum::<f64>() / 5.0;
        let mb = b.iter().sum::<f64>() / 4.0;
        let ss: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
        let sp2 = ss / 7.0;
        let tstat = (ma - mb) / (sp2 * (1.0 / 5.0 + 1.0 / 4.0)).sqrt();
        let f = t.effects[0].f.unwrap();
        assert!((f - tstat * tstat).abs() < 1e-9 * f);
        assert!((t.effects[0].p.unwrap() - two_sided_p(tstat, 7.0)).abs() < 1e-9);
    }

    #[test]
    fn balanced_three_by_five() {
        let data: [&[f64]; 3] = [
            &[2.0, 3.0, 4.0, 3.0, 3.0],
            &[5.0, 6.0, 5.0, 7.0, 7.0],
            &[8.0, 9.0, 9.0, 8.0, 6.0],
        ];
        let t = anova_one_way(&groups(&data)).unwrap();
        // means 3, 6, 8; grand mean 17/3
        let ssb = 5.0 * ((3.0f64 - 17.0 / 3.0).powi(2) + (6.0f64 - 17.0 / 3.0).powi(2) + (8.0f64 - 17.0 / 3.0).powi(2));
        let ssw = 2.0 + 4.0 + 6.0;
        assert!((t.effects[0].sum_sq - ssb).abs() < 1e-9);
        assert!((t.residual.sum_sq - ssw).abs() < 1e-9);
        assert!((t.total_sum_sq - ssb - ssw).abs() < 1e-9);
        assert_eq!((t.effects[0].df, t.residual.df), (2, 12));
    }

    #[test]
    fn empty_group_rejected() {
        assert!(anova_one_way(&groups(&[&[1.0, 2.0], &[]])).is_err());
        assert!(anova_one_way(&groups(&[&[1.0, 2.0]])).is_err());
    }

    fn crossed(cell: impl Fn(usize, usize, usize) -> f64, reps: usize) -> (Vec<f64>, Vec<String>, Vec<String>) {
        let (mut y, mut a, mut b) = (vec![], vec![], vec![]);
        for i in 0..2 {
            for j in 0..3 {
                for r in 0..reps {
                    y.push(cell(i, j, r));
                    a.push(format!("a{i}"));
                    b.push(format!("b{j}"));
                }
            }
        }
        (y, a, b)
    }

    #[test]
    fn additive_means_have_no_interaction() {
        let noise = [0.3, -0.3, 0.1, -0.1];
        let (y, a, b) = crossed(|i, j, r| 1.0 + i as f64 * 2.0 + j as f64 * 0.5 + noise[r], 4);
        let t = anova_two_way(&y, &a, &b, ("a", "b"), true, SumOfSquares::TypeII).unwrap();
        assert!(t.effects[2].sum_sq.abs() < 1e-9);
    }

    #[test]
    fn balanced_matches_classical() {
        let noise = [0.4, -0.2, 0.7, -0.9];
        let (y, a, b) = crossed(|i, j, r| (i * j) as f64 + j as f64 * 0.3 + noise[(r + i + j) % 4], 4);
        let t = anova_two_way(&y, &a, &b, ("a", "b"), true, SumOfSquares::TypeII).unwrap();
        let n = y.len() as f64;
        let grand = y.iter().sum::<f64>() / n;
        let mean_where = |pred: &dyn Fn(usize) -> bool| {
            let v: Vec<f64> = (0..y.len()).filter(|&k| pred(k)).map(|k| y[k]).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let ss_a: f64 = (0..2)
            .map(|i| 12.0 * (mean_where(&|k| a[k] == format!("a{i}")) - grand).powi(2))
            .sum();
        let ss_b: f64 = (0..3)
            .map(|j| 8.0 * (mean_where(&|k| b[k] == format!("b{j}")) - grand).powi(2))
            .sum();
        let ss_cells: f64 = (0..2)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| 4.0 * (mean_where(&|k| a[k] == format!("a{i}") && b[k] == format!("b{j}")) - grand).powi(2))
            .sum();
        let total: f64 = y.iter().map(|v| (v - grand).powi(2)).sum();
        assert!((t.effects[0].sum_sq - ss_a).abs() < 1e-9);
        assert!((t.effects[1].sum_sq - ss_b).abs() < 1e-9);
        assert!((t.effects[2].sum_sq - (ss_cells - ss_a - ss_b)).abs() < 1e-9);
        assert!((t.residual.sum_sq - (total - ss_cells)).abs() < 1e-9);
        let sum: f64 = t.effects.iter().map(|e| e.sum_sq).sum::<f64>() + t.residual.sum_sq;
        assert!((sum - total).abs() < 1e-9 * total);
    }

    #[test]
    fn empty_cell_reported() {
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let a = ["x", "x", "y", "y", "y"];
        let b = ["p", "q", "p", "p", "p"];
        match anova_two_way(&y, &a, &b, ("a", "b"), true, SumOfSquares::TypeII) {
            Err(Error::EmptyCells(cells)) => assert_eq!(cells, vec!["y:q".to_string()]),
            other => panic!("{other:?}"),
        }
        assert!(anova_two_way(&y, &a, &b, ("a", "b"), false, SumOfSquares::TypeII).is_ok());
    }

    #[test]
    fn type_one_first_factor_unadjusted() {
        let y = vec![1.0, 2.0, 2.5, 4.0, 5.0, 5.5, 3.0];
        let a = ["x", "x", "x", "y", "y", "y", "y"];
        let b = ["p", "q", "q", "p", "q", "p", "p"];
        let t1 = anova_two_way(&y, &a, &b, ("a", "b"), false, SumOfSquares::TypeI).unwrap();
        let one = anova_one_way(&[
            ("x".into(), vec![1.0, 2.0, 2.5]),
            ("y".into(), vec![4.0, 5.0, 5.5, 3.0]),
        ])
        .unwrap();
        assert!((t1.effects[0].sum_sq - one.effects[0].sum_sq).abs() < 1e-9);
    }
}
