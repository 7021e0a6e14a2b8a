use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::quarter::QuarterTable;
use crate::engagement::reactions_start;
use crate::error::{Error, Result};
use crate::net::DEFAULT_THRESHOLD;
use crate::stats::Method;

/// Which date ends the "before the election" subset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreElectionCutoff {
    #[default]
    ElectionDay,
    /// Start of the first post-election quarter.
    QuarterStart,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WordLevelGrouping {
    #[default]
    Lemma,
    Politician,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub quarters: QuarterTable,
    pub election_date: NaiveDate,
    pub pre_election_cutoff: PreElectionCutoff,
    /// Positive and negative reactions count from this date.
    pub reactions_start: NaiveDate,
    pub threshold: f64,
    pub per_politician: usize,
    pub seed: u64,
    pub alpha: f64,
    pub bonferroni_family: usize,
    pub method: Method,
    /// Minimum metaphorical and literal posts per lemma.
    pub lemma_min_posts: usize,
    /// Posts with more metaphors than this are excluded from the word-level study.
    pub max_post_metaphors: usize,
    pub top_lemmas: usize,
    pub word_level_grouping: WordLevelGrouping,
    pub pre_election_subset: bool,
    pub post_election_control: bool,
    pub party_interaction: bool,
    pub election_interaction: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            quarters: QuarterTable::default(),
            election_date: NaiveDate::from_ymd_opt(2016, 11, 8).expect("valid date"),
            pre_election_cutoff: PreElectionCutoff::default(),
            reactions_start: reactions_start(),
            threshold: DEFAULT_THRESHOLD,
            per_politician: 100,
            seed: 0,
            alpha: 0.05,
            bonferroni_family: 5,
            method: Method::Reml,
            lemma_min_posts: 10,
            max_post_metaphors: 1,
            top_lemmas: 10,
            word_level_grouping: WordLevelGrouping::default(),
            pre_election_subset: false,
            post_election_control: false,
            party_interaction: false,
            election_interaction: false,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.per_politician == 0 {
            return Err(Error::InvalidConfig("per_politician must be at least 1".into()));
        }
        if self.bonferroni_family == 0 {
            return Err(Error::InvalidConfig("bonferroni_family must be at least 1".into()));
        }
        Ok(())
    }

    /// First date that counts as after the election for the subset rerun.
    pub fn pre_election_end(&self) -> NaiveDate {
        match self.pre_election_cutoff {
            PreElectionCutoff::ElectionDay => self.election_date,
            PreElectionCutoff::QuarterStart => self.quarters.bounds()[3],
        }
    }
}
