//! The five `ln(x + 1)` engagement metrics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::Post;
use crate::error::{Error, Result};

/// First UTC date on which positive and negative reactions are counted.
pub fn reactions_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 3, 1).expect("valid date")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Participation,
    Propagation,
    Acceptance,
    PosProvocation,
    NegProvocation,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Participation,
        Metric::Propagation,
        Metric::Acceptance,
        Metric::PosProvocation,
        Metric::NegProvocation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Participation => "participation",
            Metric::Propagation => "propagation",
            Metric::Acceptance => "acceptance",
            Metric::PosProvocation => "pos_provocation",
            Metric::NegProvocation => "neg_provocation",
        }
    }

    /// Whether the metric only exists for posts on or after [`reactions_start`].
    pub fn date_limited(self) -> bool {
        matches!(self, Metric::PosProvocation | Metric::NegProvocation)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s.replace('-', "_"))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricValue {
    Value(f64),
    /// Reaction type did not exist yet when the post was written.
    Ineligible,
    /// The source count was null.
    Missing,
}

impl MetricValue {
    pub fn value(self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementVector {
    pub participation: MetricValue,
    pub propagation: MetricValue,
    pub acceptance: MetricValue,
    pub pos_provocation: MetricValue,
    pub neg_provocation: MetricValue,
}

impl EngagementVector {
    pub fn get(&self, metric: Metric) -> MetricValue {
        match metric {
            Metric::Participation => self.participation,
            Metric::Propagation => self.propagation,
            Metric::Acceptance => self.acceptance,
            Metric::PosProvocation => self.pos_provocation,
            Metric::NegProvocation => self.neg_provocation,
        }
    }
}

pub fn log1p_count(count: u64) -> f64 {
    (count as f64).ln_1p()
}

fn sum(counts: &[Option<u64>]) -> Option<u64> {
    counts.iter().try_fold(0u64, |acc, c| c.map(|c| acc + c))
}

pub fn compute_engagement(post: &Post) -> EngagementVector {
    compute_engagement_with_cutoff(post, reactions_start())
}

pub fn compute_engagement_with_cutoff(post: &Post, cutoff: NaiveDate) -> EngagementVector {
    let r = &post.reactions;
    let value = |c: Option<u64>| c.map_or(MetricValue::Missing, |c| MetricValue::Value(log1p_count(c)));
    let eligible = post.timestamp.date_naive() >= cutoff;
    let limited = |c: Option<u64>| if eligible { value(c) } else { MetricValue::Ineligible };
    EngagementVector {
        participation: value(r.comments),
        propagation: value(r.shares),
        acceptance: value(r.likes),
        pos_provocation: limited(sum(&[r.love, r.haha, r.wow])),
        neg_provocation: limited(sum(&[r.angry, r.sad])),
    }
}

/// CSV with one row per post; ineligible or missing metrics are empty cells.
pub fn write_engagement_csv<W: Write>(rows: &[(&str, EngagementVector)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["post_id".to_string()];
    header.extend(Metric::ALL.iter().map(|m| m.as_str().to_string()));
    header.extend(["pos_provocation_eligible".into(), "neg_provocation_eligible".into()]);
    w.write_record(&header)?;
    for (id, e) in rows {
        let mut rec = vec![id.to_string()];
        rec.extend(
            Metric::ALL
                .iter()
                .map(|&m| e.get(m).value().map(|v| v.to_string()).unwrap_or_default()),
        );
        for m in [Metric::PosProvocation, Metric::NegProvocation] {
            rec.push(u8::from(e.get(m) != MetricValue::Ineligible).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
