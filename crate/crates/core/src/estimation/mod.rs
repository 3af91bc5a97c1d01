//! Constrained maximum likelihood for extended association models.

mod constraints;
mod fit;
mod line_search;
mod param;
mod spec;
mod step;

pub use constraints::{constraint_eval, ConstraintEval, ConstraintSystem};
pub use fit::{chi2_p_value, deviance, deviance_dof, fit, fit_table, FitOptions, FitResult};
pub use line_search::{cubic_maximizer, line_search, LineSearchOutcome, MIN_STEP};
pub use param::{canonical_to_prob, indicator_basis, score_info, CanonicalParam};
pub use spec::{LinearConstraint, ModelSpec, ScoreNormalization};
pub use step::{as_step, independent_rows, null_space_basis, AsStep, DEPENDENCE_TOL};
