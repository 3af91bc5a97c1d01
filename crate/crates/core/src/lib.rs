//! Extended RC(K) association models for two-way contingency tables, with
//! interactions measured on the scale of a power divergence.
//!
//! ```
//! use rcassoc::{data, fit_table, DivergenceFamily, FitOptions, LinearConstraint, LogitType, ModelSpec};
//!
//! let table = data::british_mobility();
//! let spec = ModelSpec::new(LogitType::G, LogitType::G, DivergenceFamily::cressie_read(-0.04).unwrap(), 1)
//!     .with_constraint(LinearConstraint::MarginalShift);
//! let fit = fit_table(&table, &spec, &FitOptions::default()).unwrap();
//! assert!(fit.converged);
//! assert_eq!(fit.dof, 12);
//! ```

// `!(x > 0.0)` is used on purpose so NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod data;
pub mod divergence;
pub mod error;
pub mod estimation;
pub mod interactions;
pub mod rank;
pub mod table;

pub use analysis::{
    counterexample_verify, dependence_report, reconstruct, score_correlation, svd_scores,
    Counterexample, DependenceReport, ScoreDecomposition,
};
pub use divergence::{phi_divergence, DivergenceFamily};
pub use error::{Error, Result};
pub use estimation::{
    fit, fit_table, CanonicalParam, FitOptions, FitResult, LinearConstraint, ModelSpec,
};
pub use interactions::{
    col_logits, gamma_matrix, lor_matrix, marginal_logits, row_logits, InteractionMatrix, Margin,
    MarginalLogits,
};
pub use rank::{rank_residual, DeflationPlan};
pub use table::{event_set, parse_counts, ContingencyTable, EventSet, LogitType, Side};
