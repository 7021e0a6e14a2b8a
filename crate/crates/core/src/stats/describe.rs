//! Descriptive summaries for plots.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample variance with `n − 1` denominator.
pub fn variance(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    Some(values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64)
}

/// Linear-interpolation quantile of sorted data (R type 7).
pub fn quantile(sorted: &[f64], prob: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&prob) {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme observations within 1.5 IQR of the quartiles.
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: usize,
}

pub fn boxplot(values: &[f64]) -> Option<BoxplotSummary> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile(&v, 0.25)?;
    let q3 = quantile(&v, 0.75)?;
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v
        .iter()
        .copied()
        .filter(|x| (lo_fence..=hi_fence).contains(x))
        .collect();
    Some(BoxplotSummary {
        n: v.len(),
        mean: mean(&v)?,
        min: v[0],
        q1,
        median: quantile(&v, 0.5)?,
        q3,
        max: v[v.len() - 1],
        lower_whisker: inside[0],
        upper_whisker: inside[inside.len() - 1],
        outliers: v.len() - inside.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// t-based two-sided confidence interval for the mean.
pub fn mean_ci(values: &[f64], level: f64) -> Option<MeanCi> {
    let m = mean(values)?;
    let n = values.len();
    let half = match variance(values) {
        Some(var) if var > 0.0 => {
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).ok()?;
            t.inverse_cdf(0.5 + level / 2.0) * (var / n as f64).sqrt()
        }
        _ => 0.0,
    };
    Some(MeanCi {
        n,
        mean: m,
        lower: m - half,
        upper: m + half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 100.0];
        let b = boxplot(&v).unwrap();
        assert!((b.q1 - 3.25).abs() < 1e-12);
        assert!((b.median - 5.5).abs() < 1e-12);
        assert!((b.q3 - 7.75).abs() < 1e-12);
        assert_eq!(b.upper_whisker, 9.0);
        assert_eq!(b.outliers, 1);
        assert!(boxplot(&[]).is_none());
    }

    #[test]
    fn interval() {
        let ci = mean_ci(&[1.0, 2.0, 3.0, 4.0], 0.95).unwrap();
        // t(0.975, 3) = 3.182446
        let half = 3.182446 * (5.0f64 / 3.0 / 4.0).sqrt();
        assert!((ci.upper - 2.5 - half).abs() < 1e-5);
        let flat = mean_ci(&[2.0; 3], 0.95).unwrap();
        assert_eq!((flat.lower, flat.upper), (2.0, 2.0));
    }
}
