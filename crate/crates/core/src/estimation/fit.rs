use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analysis::{svd_scores_matrix, ScoreDecomposition};
use crate::error::{Error, Result};
use crate::interactions::PairGeometry;
use crate::table::ContingencyTable;

use super::constraints::ConstraintSystem;
use super::line_search::{line_search, LineSearchOutcome};
use super::param::CanonicalParam;
use super::spec::ModelSpec;
use super::step::{as_step, independent_rows, DEPENDENCE_TOL};

/// Ratio between the penalty weight and the smallest weight that makes the
/// search direction an ascent direction of the merit.
const PENALTY_MARGIN: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Bound on `max |h|` at convergence.
    pub tol_h: f64,
    /// Bound on the relative change of the log-likelihood between iterations.
    pub tol_ll: f64,
    pub max_iter: usize,
    /// Added to every count to form the starting table.
    pub start_smoothing: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol_h: 1e-7,
            tol_ll: 1e-9,
            max_iter: 500,
            start_smoothing: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub theta_hat: DVector<f64>,
    pub pi_hat: DMatrix<f64>,
    /// Fitted interactions on the model's scale.
    pub gamma_hat: DMatrix<f64>,
    pub deviance: f64,
    pub dof: usize,
    pub p_value: f64,
    pub constraint_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `sum y log pi_hat`.
    pub loglik: f64,
    /// Constraints dropped as linearly dependent at the solution.
    pub dropped_constraints: usize,
    pub scores: Option<ScoreDecomposition>,
    /// Why the iteration stopped when it did not converge.
    pub message: Option<String>,
}

/// Likelihood-ratio statistic `2 sum y log(y / (n pi))` with `0 log 0 = 0`.
pub fn deviance(y: &DMatrix<f64>, pi: &DMatrix<f64>) -> f64 {
    let n = y.sum();
    let d: f64 = y
        .iter()
        .zip(pi.iter())
        .filter(|(&yi, _)| yi > 0.0)
        .map(|(&yi, &p)| yi * (yi / (n * p)).ln())
        .sum();
    (2.0 * d).max(0.0)
}

/// Upper tail of the chi-squared distribution. With no degrees of freedom
/// the statistic is zero by construction and the p-value is one.
pub fn chi2_p_value(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .map(|d| d.sf(statistic.max(0.0)))
        .unwrap_or(f64::NAN)
}

/// Deviance and degrees of freedom of a fit against counts `y`.
pub fn deviance_dof(fit: &FitResult, y: &DMatrix<f64>) -> (f64, usize) {
    (deviance(y, &fit.pi_hat), fit.dof)
}

fn loglik(y: &DVector<f64>, pi: &DVector<f64>) -> f64 {
    y.iter()
        .zip(pi.iter())
        .filter(|(&yi, _)| yi > 0.0)
        .map(|(&yi, &p)| yi * p.ln())
        .sum()
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const RESTORATION_STEPS: usize = 5;

/// Gauss-Newton iterations on `h` alone, `theta <- theta - H (H'H)^{-1} h`.
/// Returns the new point if it reduced `max |h|`.
fn restore_feasibility(
    start: &CanonicalParam,
    y: &DVector<f64>,
    system: &ConstraintSystem,
    tol: f64,
) -> Option<(CanonicalParam, f64)> {
    let mut param = start.clone();
    let mut best = sup_norm(&system.evaluate(&param, None).ok()?);
    let initial = best;
    for _ in 0..RESTORATION_STEPS {
        let step = as_step(&param, y, system).ok()?;
        let correction = &step.v_hat - &step.direction;
        let trial = param.with_theta(&param.theta - &correction);
        let h = sup_norm(&system.evaluate(&trial, None).ok()?);
        if !(h < best) {
            break;
        }
        param = trial;
        best = h;
        if best <= tol {
            break;
        }
    }
    (best < initial).then_some((param, best))
}

/// Fits `spec` to the counts in `table`. A table built from probabilities is
/// treated as counts `n pi`.
pub fn fit_table(
    table: &ContingencyTable,
    spec: &ModelSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    let y = match table.counts() {
        Some(c) => c.clone(),
        None => table.pi() * table.n(),
    };
    fit(&y, spec, opts)
}

/// Maximum likelihood fit of `spec` to the count matrix `y`.
///
/// Returns an error only for invalid input. Numerical failure during the
/// iteration yields a result with `converged == false` and a message.
pub fn fit(y: &DMatrix<f64>, spec: &ModelSpec, opts: &FitOptions) -> Result<FitResult> {
    let (rows, cols) = y.shape();
    if y.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(
            "counts must be finite and nonnegative".into(),
        ));
    }
    let n = y.sum();
    if n <= 0.0 {
        return Err(Error::Domain("counts sum to zero".into()));
    }
    let system = ConstraintSystem::new(spec, rows, cols)?;
    let yv = DVector::from_iterator(rows * cols, y.transpose().iter().copied());

    let cells = (rows * cols) as f64;
    let start = y.map(|v| (v + opts.start_smoothing) / (n + cells * opts.start_smoothing));
    let mut param = CanonicalParam::from_probs(&start)?;
    let mut pi = param.prob_vec();
    let mut ll = loglik(&yv, &pi);
    let mut iterations = 0;
    let mut converged = false;
    let mut message = None;
    // Weight of the constraint penalty in the line-search merit.
    let mut penalty: f64 = 1.0;

    if system.is_empty() {
        // Saturated model: the smoothed start is not the optimum, the
        // empirical table is (where it is positive).
        let positive = y.iter().all(|&v| v > 0.0);
        if positive {
            param = CanonicalParam::from_probs(&(y / n))?;
            pi = param.prob_vec();
            ll = loglik(&yv, &pi);
            converged = true;
        }
    }

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let step = match as_step(&param, &yv, &system) {
            Ok(s) => s,
            Err(e) => {
                message = Some(format!("step failed: {e}"));
                break;
            }
        };
        let h0_norm = sup_norm(&step.h0);
        let jd = &step.jacobian * &step.direction;
        let ll_slope = step.score.dot(&step.direction) / n;
        // The linearized constraints make -h'(J d) = h'h. On the quadratic
        // model the merit along d peaks at
        //   t* = (ll_slope + c h'h) / (curvature + c h'h),
        // so raising c keeps t* near the full step, where h vanishes.
        let feasibility_slope = -step.h0.dot(&jd);
        let curvature = step.direction.dot(&(&step.info * &step.direction)) / n;
        if feasibility_slope > 0.0 {
            let shortfall = (curvature - ll_slope).max(0.0);
            penalty = penalty.max(PENALTY_MARGIN * shortfall / feasibility_slope);
        }
        let f0 = ll / n - penalty * step.h0.norm_squared() / 2.0;
        let slope0 = ll_slope + penalty * feasibility_slope;
        let plan = step.plan.clone();
        let theta0 = param.theta.clone();
        let direction = step.direction.clone();

        let outcome = line_search(f0, slope0, direction.amax(), |t| {
            let trial = param.with_theta(&theta0 + &direction * t);
            let h = system.evaluate(&trial, plan.as_ref()).ok()?;
            Some(loglik(&yv, &trial.prob_vec()) / n - penalty * h.norm_squared() / 2.0)
        });
        match outcome {
            LineSearchOutcome::Step { t, .. } => {
                param = param.with_theta(&theta0 + &direction * t);
                pi = param.prob_vec();
                let ll_new = loglik(&yv, &pi);
                let change = (ll_new - ll).abs() / ll.abs().max(1.0);
                ll = ll_new;
                let h_norm = match system.evaluate(&param, None) {
                    Ok(h) => sup_norm(&h),
                    Err(e) => {
                        message = Some(format!("constraint evaluation failed: {e}"));
                        break;
                    }
                };
                if h_norm <= opts.tol_h && change <= opts.tol_ll {
                    converged = true;
                }
            }
            LineSearchOutcome::Stalled => {
                // The merit no longer resolves progress. At a stationary
                // point only feasibility can still be improved, by
                // minimum-norm corrections along the constraint gradients.
                let stationary = sup_norm(&step.projected_score()) <= 1e-6 * n;
                let mut h_norm = h0_norm;
                if stationary && h_norm > opts.tol_h {
                    if let Some((p, h)) = restore_feasibility(&param, &yv, &system, opts.tol_h) {
                        param = p;
                        pi = param.prob_vec();
                        ll = loglik(&yv, &pi);
                        h_norm = h;
                    }
                }
                if h_norm <= opts.tol_h && stationary {
                    converged = true;
                } else {
                    message = Some(format!("line search stalled with max |h| = {h_norm:.3e}"));
                }
                break;
            }
        }
    }
    if !converged && message.is_none() {
        message = Some(format!("no convergence after {iterations} iterations"));
    }

    let pi_hat = param.prob_matrix();
    let (constraint_norm, dof, dropped) = match system.evaluate_with_jacobian(&param) {
        Ok(e) => {
            let kept = independent_rows(&e.jacobian, DEPENDENCE_TOL).len();
            (sup_norm(&e.h), kept, e.h.len() - kept)
        }
        Err(_) => (f64::NAN, system.len(), 0),
    };
    let geometry = PairGeometry::new(rows, cols, spec.rows_logit, spec.cols_logit);
    let gamma_hat = geometry.gamma(&pi_hat, spec.family)?;
    let scores = if spec.rank >= 1 {
        svd_scores_matrix(&gamma_hat, &pi_hat, spec.rank).ok()
    } else {
        None
    };
    let dev = deviance(y, &pi_hat);
    Ok(FitResult {
        spec: spec.clone(),
        theta_hat: param.theta.clone(),
        pi_hat,
        gamma_hat,
        deviance: dev,
        dof,
        p_value: chi2_p_value(dev, dof),
        constraint_norm,
        iterations,
        converged,
        loglik: ll,
        dropped_constraints: dropped,
        scores,
        message,
    })
}
