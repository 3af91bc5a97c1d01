//! Post-fit analysis: association scores, score correlation, reconstruction
//! of a table from its invariants and positive-dependence diagnostics.

mod counterexamples;
mod dependence;
mod reconstruct;
mod scores;

pub use counterexamples::{counterexample_verify, Counterexample, CounterexampleRecord};
pub use dependence::{
    collapsed_survival, dependence_report, implication_violations, pair_matrices,
    quadrant_dependence, row_below_later_rows, row_survival, stochastic_order, DependenceReport,
    PairDependence, NONNEG_TOL,
};
pub use reconstruct::{margin_from_logits, reconstruct, Reconstruction, RECONSTRUCT_TOL};
pub use scores::{
    score_correlation, svd_scores, svd_scores_matrix, ScoreDecomposition, SCORE_RANK_TOL,
};
