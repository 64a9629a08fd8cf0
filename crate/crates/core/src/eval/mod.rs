//! Fold construction for both protocols, macro metrics, result tables and
//! rank-based significance tests.

mod folds;
mod metrics;
mod results;
mod stats;

pub use folds::{make_anchored_folds, make_folds, make_holdout_folds, Fold, FoldPlan, Protocol};
pub use metrics::{accuracy, confusion_matrix, macro_metrics, ClassScores, MetricsReport};
pub use results::{format_results, format_summary, mean_std, parse_results, read_results, score_matrix, summarize, write_results, ResultRow, SummaryRow, RESULTS_HEADER};
pub use stats::{compare, friedman_test, midranks, nemenyi_cd, nemenyi_compare, nemenyi_q, RankComparison, MAX_TABULATED_K};
