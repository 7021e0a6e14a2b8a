//! The three corpus analyses and their report files.

pub mod config;
pub mod post_level;
pub mod quarter;
pub mod record;
pub mod report;
pub mod usage;
pub mod word_level;

pub use config::{PreElectionCutoff, StudyConfig, WordLevelGrouping};
pub use post_level::{balanced_sample, run_post_engagement_study, PostEngagementOptions, PostEngagementReport};
pub use quarter::{Quarter, QuarterTable};
pub use record::{join_study_posts, JoinSummary, StudyPost};
pub use report::{emit_post_engagement_report, emit_usage_report, emit_word_level_report};
pub use usage::{run_usage_study, UsageReport};
pub use word_level::{run_word_level_study, select_lemmas, LemmaInstance, LemmaRole, LemmaSelection, WordLevelReport};
