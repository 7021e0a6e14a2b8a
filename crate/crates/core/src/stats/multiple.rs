use crate::error::{Error, Result};

/// `min(1, p·m)` for each p value.
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < p_values.len() {
        return Err(Error::InvalidConfig(format!(
            "family size {m} is smaller than the {} p values",
            p_values.len()
        )));
    }
    p_values
        .iter()
        .map(|&p| {
            if (0.0..=1.0).contains(&p) {
                Ok((p * m as f64).min(1.0))
            } else {
                Err(Error::InvalidPValue(p))
            }
        })
        .collect()
}

/// `***` below 0.001, `**` below 0.01, `*` below 0.05.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
