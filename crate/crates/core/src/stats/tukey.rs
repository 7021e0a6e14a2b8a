//! Studentized range distribution and Tukey–Kramer pairwise comparisons.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use super::ols::two_sided_p;
use super::quadrature::integrate;
use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-6;
/// Above this the chi density is treated as a point mass at 1.
const DF_LIMIT: f64 = 25_000.0;

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// `Φ(z) − Φ(z − w)` without cancellation in either tail.
fn normal_band(z: f64, w: f64) -> f64 {
    if z - 0.5 * w > 0.0 {
        upper_tail(z - w) - upper_tail(z)
    } else {
        upper_tail(-z) - upper_tail(w - z)
    }
}

/// P(range of `k` iid standard normals ≤ `w`).
pub fn normal_range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let f = |z: f64| normal_pdf(z) * normal_band(z, w).powi(km1);
    // The integrand lives where φ(z) is non-negligible.
    let (lo, hi) = (-8.5, 8.5);
    let mid = (0.5 * w).clamp(lo, hi);
    let a = integrate(f, lo, mid, 0.1 * TOLERANCE / k as f64, 200);
    let b = integrate(f, mid, hi, 0.1 * TOLERANCE / k as f64, 200);
    (k as f64 * (a.value + b.value)).clamp(0.0, 1.0)
}

fn ln_chi_density(s: f64, df: f64) -> f64 {
    let h = 0.5 * df;
    h * df.ln() - ln_gamma(h) - (h - 1.0) * std::f64::consts::LN_2 + (df - 1.0) * s.ln() - h * s * s
}

/// CDF of the studentized range with `k` groups and `df` error degrees of
/// freedom (`f64::INFINITY` allowed).
pub fn ptukey(q: f64, k: usize, df: f64) -> f64 {
    assert!(k >= 2, "studentized range needs k >= 2");
    assert!(df > 0.0, "df must be positive");
    if q.is_nan() {
        return f64::NAN;
    }
    if q <= 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    if df > DF_LIMIT {
        return normal_range_cdf(q, k);
    }
    // S = sqrt(χ²_df / df) concentrates around 1 with spread ≈ 1/sqrt(2 df).
    let spread = 10.0 / (2.0 * df).sqrt();
    let lo = (1.0 - spread).max(0.0);
    let hi = 1.0 + spread.max(8.0 / df.sqrt());
    let f = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            ln_chi_density(s, df).exp() * normal_range_cdf(q * s, k)
        }
    };
    let left = integrate(f, lo, 1.0, 0.25 * TOLERANCE, 200);
    let right = integrate(f, 1.0, hi, 0.25 * TOLERANCE, 200);
    (left.value + right.value).clamp(0.0, 1.0)
}

/// Upper-tail probability of the studentized range.
pub fn tukey_p(q: f64, k: usize, df: f64) -> f64 {
    (1.0 - ptukey(q, k, df)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyComparison {
    pub group_a: String,
    pub group_b: String,
    /// `mean_b − mean_a`.
    pub mean_diff: f64,
    pub q: f64,
    pub p_adj: f64,
    /// Pooled-variance two-sample t p value without multiplicity adjustment.
    pub p_unadjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub alpha: f64,
    pub df_resid: usize,
    pub msw: f64,
    pub comparisons: Vec<TukeyComparison>,
}

impl TukeyResult {
    /// Groups that differ significantly from every other group.
    pub fn isolated_groups(&self) -> Vec<String> {
        let mut names: Vec<&String> = self.comparisons.iter().flat_map(|c| [&c.group_a, &c.group_b]).collect();
        names.sort();
        names.dedup();
        names
            .into_iter()
            .filter(|g| {
                self.comparisons
                    .iter()
                    .filter(|c| &c.group_a == *g || &c.group_b == *g)
                    .all(|c| c.significant)
            })
            .cloned()
            .collect()
    }

    pub fn significant_pairs(&self) -> impl Iterator<Item = &TukeyComparison> {
        self.comparisons.iter().filter(|c| c.significant)
    }
}

pub fn tukey_hsd(groups: &[(String, Vec<f64>)], alpha: f64) -> Result<TukeyResult> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData("Tukey HSD needs at least 2 groups".into()));
    }
    if let Some((name, _)) = groups.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::InsufficientData(format!("group {name} is empty")));
    }
    let k = groups.len();
    let n: usize = groups.iter().map(|(_, v)| v.len()).sum();
    if n <= k {
        return Err(Error::InsufficientData("no residual degrees of freedom".into()));
    }
    let df = n - k;
    let means: Vec<f64> = groups
        .iter()
        .map(|(_, v)| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let ssw: f64 = groups
        .iter()
        .zip(&means)
        .map(|((_, v), m)| v.iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    let scale: f64 = groups.iter().flat_map(|(_, v)| v.iter()).map(|x| x * x).sum();
    let ssw = if ssw <= 1e-20 * scale { 0.0 } else { ssw };
    let msw = ssw / df as f64;

    let mut comparisons = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let (ni, nj) = (groups[i].1.len() as f64, groups[j].1.len() as f64);
            let diff = means[j] - means[i];
            let negligible = diff.abs() <= 1e-10 * means[i].abs().max(means[j].abs());
            let se = (msw / 2.0 * (1.0 / ni + 1.0 / nj)).sqrt();
            let (q, p_adj, p_unadj) = if negligible {
                (0.0, 1.0, 1.0)
            } else if se == 0.0 {
                (f64::INFINITY, 0.0, 0.0)
            } else {
                let q = diff.abs() / se;
                (
                    q,
                    tukey_p(q, k, df as f64),
                    two_sided_p(q / std::f64::consts::SQRT_2, df as f64),
                )
            };
            comparisons.push(TukeyComparison {
                group_a: groups[i].0.clone(),
                group_b: groups[j].0.clone(),
                mean_diff: diff,
                q,
                p_adj,
                p_unadjusted: p_unadj,
                significant: p_adj < alpha,
            });
        }
    }
    Ok(TukeyResult {
        alpha,
        df_resid: df,
        msw,
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn two_groups_equals_t_test() {
        // With k = 2 the studentized range is √2·|t|.
        for q in [0.5, 1.0, 2.8, 4.0] {
            let p = tukey_p(q, 2, 10.0);
            let t = two_sided_p(q / std::f64::consts::SQRT_2, 10.0);
            assert!((p - t).abs() < 2e-6, "q={q}: {p} vs {t}");
        }
    }

    #[test]
    fn normal_range_two() {
        // Range of two normals is |N(0, 2)|.
        let w = 1.7;
        let exact = 1.0 - 2.0 * upper_tail(w / std::f64::consts::SQRT_2);
        assert!((normal_range_cdf(w, 2) - exact).abs() < 1e-8);
    }

    #[test]
    fn matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (k, df, q) = (3usize, 12usize, 3.77f64);
        let n = 200_000;
        let mut exceed = 0usize;
        for _ in 0..n {
            let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let range = z.iter().cloned().fold(f64::MIN, f64::max) - z.iter().cloned().fold(f64::MAX, f64::min);
            let chi2: f64 = (0..df)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    e * e
                })
                .sum();
            if range / (chi2 / df as f64).sqrt() > q {
                exceed += 1;
            }
        }
        let mc = exceed as f64 / n as f64;
        let p = tukey_p(q, k, df as f64);
        assert!((p - mc).abs() < 0.004, "{p} vs {mc}");
        assert!((p - 0.05).abs() < 0.003);
    }

    #[test]
    fn large_df_approaches_normal_limit() {
        let a = ptukey(3.3, 4, 20_000.0);
        let b = ptukey(3.3, 4, f64::INFINITY);
        assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn identical_groups() {
        let groups = vec![("a".to_string(), vec![1.0; 4]), ("b".to_string(), vec![1.0; 4])];
        let r = tukey_hsd(&groups, 0.05).unwrap();
        assert_eq!(r.comparisons[0].q, 0.0);
        assert_eq!(r.comparisons[0].p_adj, 1.0);
    }

    #[test]
    fn zero_within_variance() {
        let groups = vec![("a".to_string(), vec![1.0; 3]), ("b".to_string(), vec![2.0; 3])];
        let r = tukey_hsd(&groups, 0.05).unwrap();
        assert!(r.comparisons[0].q.is_infinite());
        assert_eq!(r.comparisons[0].p_adj, 0.0);
    }

    #[test]
    fn adjusted_exceeds_unadjusted() {
        let groups: Vec<(String, Vec<f64>)> = (0..4)
            .map(|g| {
                (
                    format!("g{g}"),
                    (0..6)
                        .map(|i| g as f64 * 0.4 + ((i * 7 + g) % 5) as f64 * 0.3)
                        .collect(),
                )
            })
            .collect();
        let r = tukey_hsd(&groups, 0.05).unwrap();
        for c in &r.comparisons {
            assert!(c.p_adj >= c.p_unadjusted - 1e-9, "{c:?}");
            assert!((0.0..=1.0).contains(&c.p_adj));
        }
    }

    #[test]
    fn monotone_in_q() {
        let mut last = 0.0;
        for i in 1..30 {
            let c = ptukey(i as f64 * 0.25, 5, 8.0);
            assert!(c >= last - 1e-9);
            last = c;
        }
        assert!(last > 0.99);
    }
}
