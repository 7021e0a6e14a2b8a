use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quarter {
    #[serde(rename = "Q-3")]
    QMinus3,
    #[serde(rename = "Q-2")]
    QMinus2,
    #[serde(rename = "Q-1")]
    QMinus1,
    #[serde(rename = "Q+1")]
    QPlus1,
}

impl Quarter {
    pub const ALL: [Quarter; 4] = [Quarter::QMinus3, Quarter::QMinus2, Quarter::QMinus1, Quarter::QPlus1];

    pub fn as_str(self) -> &'static str {
        match self {
            Quarter::QMinus3 => "Q-3",
            Quarter::QMinus2 => "Q-2",
            Quarter::QMinus1 => "Q-1",
            Quarter::QPlus1 => "Q+1",
        }
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Five ascending dates bounding four half-open quarters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<NaiveDate>", into = "Vec<NaiveDate>")]
pub struct QuarterTable {
    bounds: [NaiveDate; 5],
}

impl QuarterTable {
    pub fn new(bounds: [NaiveDate; 5]) -> Result<Self> {
        if bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "quarter boundaries must be strictly increasing".into(),
            ));
        }
        Ok(QuarterTable { bounds })
    }

    pub fn bounds(&self) -> &[NaiveDate; 5] {
        &self.bounds
    }

    /// `[start, end)` of a quarter.
    pub fn interval(&self, q: Quarter) -> (NaiveDate, NaiveDate) {
        let i = q as usize;
        (self.bounds[i], self.bounds[i + 1])
    }

    pub fn assign_date(&self, date: NaiveDate) -> Option<Quarter> {
        Quarter::ALL.into_iter().find(|&q| {
            let (start, end) = self.interval(q);
            start <= date && date < end
        })
    }

    pub fn assign(&self, timestamp: DateTime<Utc>) -> Option<Quarter> {
        self.assign_date(timestamp.date_naive())
    }
}

impl Default for QuarterTable {
    fn default() -> Self {
        let d = |y, m| NaiveDate::from_ymd_opt(y, m, 7).expect("valid date");
        QuarterTable {
            bounds: [d(2016, 2), d(2016, 5), d(2016, 8), d(2016, 11), d(2017, 2)],
        }
    }
}

impl TryFrom<Vec<NaiveDate>> for QuarterTable {
    type Error = Error;
    fn try_from(v: Vec<NaiveDate>) -> Result<Self> {
        let bounds: [NaiveDate; 5] = v
            .try_into()
            .map_err(|_| Error::InvalidConfig("quarter table needs exactly 5 dates".into()))?;
        QuarterTable::new(bounds)
    }
}

impl From<QuarterTable> for Vec<NaiveDate> {
    fn from(t: QuarterTable) -> Self {
        t.bounds.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn boundary_table() {
        let t = QuarterTable::default();
        assert_eq!(t.assign_date(d(2016, 2, 7)), Some(Quarter::QMinus3));
        assert_eq!(t.assign_date(d(2016, 2, 6)), None);
        assert_eq!(t.assign_date(d(2016, 5, 6)), Some(Quarter::QMinus3));
        assert_eq!(t.assign_date(d(2016, 5, 7)), Some(Quarter::QMinus2));
        assert_eq!(t.assign_date(d(2016, 11, 8)), Some(Quarter::QPlus1));
        assert_eq!(t.assign_date(d(2016, 11, 7)), Some(Quarter::QPlus1));
        assert_eq!(t.assign_date(d(2016, 11, 6)), Some(Quarter::QMinus1));
        assert_eq!(t.assign_date(d(2017, 2, 7)), None);
    }

    #[test]
    fn rejects_unordered() {
        assert!(QuarterTable::new([
            d(2016, 1, 1),
            d(2016, 3, 1),
            d(2016, 2, 1),
            d(2016, 4, 1),
            d(2016, 5, 1)
        ])
        .is_err());
    }

    proptest::proptest! {
        #[test]
        fn in_window_dates_get_one_label(offset in 0i64..366) {
            let t = QuarterTable::default();
            let date = d(2016, 2, 7) + chrono::Duration::days(offset);
            let hits = Quarter::ALL.iter().filter(|&&q| {
                let (s, e) = t.interval(q);
                s <= date && date < e
            }).count();
            proptest::prop_assert_eq!(hits, 1);
            proptest::prop_assert!(t.assign_date(date).is_some());
        }
    }
}
