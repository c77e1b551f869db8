//! Retrieval and concept-ranking evaluation, the simulated user, and
//! cross-validated parameter tuning.

mod judgments;
mod metrics;
mod simulate;
mod stats;
mod tune;

pub use judgments::Judgments;
pub use metrics::{average_precision, ndcg, precision_at_k, EvalReport, QueryMetrics};
pub use simulate::simulate_user;
pub use stats::{paired_t_test, TTest};
pub use tune::{tune_cv, Axis, CvReport, FoldResult, ParamGrid, SearchMode};
