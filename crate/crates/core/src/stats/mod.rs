//! Regression, mixed models, ANOVA and multiple-comparison procedures.

pub mod anova;
pub mod describe;
pub mod design;
pub mod lmm;
pub mod multiple;
pub mod ols;
pub mod optimize;
pub mod quadrature;
pub mod tukey;

pub use anova::{anova_one_way, anova_two_way, AnovaRow, AnovaTable, SumOfSquares};
pub use describe::{boxplot, mean, mean_ci, quantile, variance, BoxplotSummary, MeanCi};
pub use design::DesignMatrix;
pub use lmm::{lmm_fit, lmm_fit_at, profiled_log_likelihood, LmmOptions, LmmResult, Method};
pub use multiple::{bonferroni, stars};
pub use ols::{ols_fit, Coefficient, RegressionResult};
pub use tukey::{ptukey, tukey_hsd, TukeyComparison, TukeyResult};
