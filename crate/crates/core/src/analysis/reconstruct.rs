//! Recovering a table from its marginal logits and interactions.

use nalgebra::{DMatrix, DVector};

use crate::divergence::DivergenceFamily;
use crate::error::{Error, Result};
use crate::estimation::CanonicalParam;
use crate::interactions::{
    marginal_logits_with_jacobian, InteractionMatrix, Margin, MarginalLogits, PairGeometry,
};
use crate::table::LogitType;

/// Residual bound for a successful reconstruction.
pub const RECONSTRUCT_TOL: f64 = 1e-9;
const MAX_NEWTON: usize = 200;
const MIN_INCREMENT: f64 = 1e-4;
const MAX_LM: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub pi: DMatrix<f64>,
    /// `max |residual|` over logits and interactions at `pi`.
    pub residual: f64,
    pub iterations: usize,
}

/// Marginal distribution with the given logits.
pub fn margin_from_logits(logits: &[f64], logit: LogitType) -> Result<DVector<f64>> {
    let size = logits.len() + 1;
    let mut p = vec![0.0; size];
    match logit {
        LogitType::L => {
            p[0] = 1.0;
            for x in 0..logits.len() {
                p[x + 1] = p[x] * logits[x].exp();
            }
        }
        LogitType::G => {
            // logit x is log P(> x) - log P(<= x).
            let mut below = 0.0;
            for x in 0..logits.len() {
                let cdf = 1.0 / (1.0 + logits[x].exp());
                p[x] = cdf - below;
                below = cdf;
            }
            p[size - 1] = 1.0 - below;
        }
        LogitType::C => {
            // logit x is log P(> x) - log P(= x), applied to the mass left.
            let mut rest = 1.0;
            for x in 0..logits.len() {
                p[x] = rest / (1.0 + logits[x].exp());
                rest -= p[x];
            }
            p[size - 1] = rest;
        }
        LogitType::R => {
            // logit x is log P(= x + 1) - log P(<= x).
            p[0] = 1.0;
            let mut cum = 1.0;
            for x in 0..logits.len() {
                p[x + 1] = cum * logits[x].exp();
                cum += p[x + 1];
            }
        }
    }
    if p.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "logits of type {logit} do not define a positive margin"
        )));
    }
    let total: f64 = p.iter().sum();
    Ok(DVector::from_iterator(
        size,
        p.into_iter().map(|v| v / total),
    ))
}

struct Targets<'a> {
    rows: &'a MarginalLogits,
    cols: &'a MarginalLogits,
    gamma: &'a InteractionMatrix,
    fam: DivergenceFamily,
    geometry: PairGeometry,
}

impl Targets<'_> {
    fn residual(&self, pi: &DMatrix<f64>) -> Result<DVector<f64>> {
        let (er, _) = marginal_logits_with_jacobian(pi, self.rows.logit_type, Margin::Row)?;
        let (ec, _) = marginal_logits_with_jacobian(pi, self.cols.logit_type, Margin::Column)?;
        let g = self.geometry.gamma(pi, self.fam)? - &self.gamma.values;
        let gv = g.transpose();
        let er = er - &self.rows.values;
        let ec = ec - &self.cols.values;
        Ok(DVector::from_iterator(
            er.len() + ec.len() + gv.len(),
            er.iter().chain(ec.iter()).chain(gv.iter()).copied(),
        ))
    }

    fn jacobian(&self, pi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (_, jr) = marginal_logits_with_jacobian(pi, self.rows.logit_type, Margin::Row)?;
        let (_, jc) = marginal_logits_with_jacobian(pi, self.cols.logit_type, Margin::Column)?;
        let jg = self.geometry.gamma_jacobian(pi, self.fam)?;
        let mut j = DMatrix::zeros(jr.nrows() + jc.nrows() + jg.nrows(), pi.len());
        j.rows_mut(0, jr.nrows()).copy_from(&jr);
        j.rows_mut(jr.nrows(), jc.nrows()).copy_from(&jc);
        j.rows_mut(jr.nrows() + jc.nrows(), jg.nrows())
            .copy_from(&jg);
        Ok(j)
    }
}

fn sup(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves for the table whose marginal logits and interactions equal the
/// targets, by damped Newton iteration on the canonical parameters starting
/// from the independence table with the target margins. When the direct
/// iteration stalls the interactions are scaled up gradually from zero.
pub fn reconstruct(
    row_logits: &MarginalLogits,
    col_logits: &MarginalLogits,
    gamma_target: &InteractionMatrix,
    fam: DivergenceFamily,
) -> Result<Reconstruction> {
    let rows = row_logits.values.len() + 1;
    let cols = col_logits.values.len() + 1;
    if gamma_target.values.shape() != (rows - 1, cols - 1) {
        return Err(Error::Dimension(format!(
            "interactions are {}x{}, logits imply {}x{}",
            gamma_target.values.nrows(),
            gamma_target.values.ncols(),
            rows - 1,
            cols - 1
        )));
    }
    let r = margin_from_logits(row_logits.values.as_slice(), row_logits.logit_type)?;
    let c = margin_from_logits(col_logits.values.as_slice(), col_logits.logit_type)?;
    let geometry = PairGeometry::new(rows, cols, row_logits.logit_type, col_logits.logit_type);
    let pair = (row_logits.logit_type, col_logits.logit_type);
    let independence = CanonicalParam::from_probs(&(&r * c.transpose()))?;
    let full = Targets {
        rows: row_logits,
        cols: col_logits,
        gamma: gamma_target,
        fam,
        geometry: geometry.clone(),
    };
    let done = |(param, residual, iterations): (CanonicalParam, f64, usize)| Reconstruction {
        pi: param.prob_matrix(),
        residual,
        iterations,
    };

    // Newton straight to the target first, then from the exact solution of
    // the cut-by-cut problems when a margin is global.
    if let Ok(sol) = newton(&full, &independence) {
        return Ok(done(sol));
    }
    let mut total_iter = MAX_NEWTON;
    if let Some(start) = global_start(&r, &c, &gamma_target.values, pair, fam) {
        if let Ok((param, res, iters)) = newton(&full, &CanonicalParam::from_probs(&start)?) {
            return Ok(done((param, res, total_iter + iters)));
        }
        total_iter += MAX_NEWTON;
    }

    // Otherwise follow the path of scaled targets `tau * gamma` from the
    // independence table.
    let mut param = independence;
    let mut tau: f64 = 1.0;
    let mut reached: f64 = 0.0;
    let mut increment: f64 = 1.0;
    loop {
        let scaled = InteractionMatrix {
            values: &gamma_target.values * tau,
            ..gamma_target.clone()
        };
        let targets = Targets {
            gamma: &scaled,
            geometry: geometry.clone(),
            ..full
        };
        let attempt = newton(&targets, &param).or_else(|_| levenberg_marquardt(&targets, &param));
        match attempt {
            Ok((next, res, iters)) => {
                total_iter += iters;
                if tau >= 1.0 {
                    return Ok(done((next, res, total_iter)));
                }
                param = next;
                reached = tau;
                increment = (increment * 2.0).min(1.0 - reached);
            }
            Err(res) => {
                total_iter += MAX_NEWTON;
                increment *= 0.5;
                if increment < MIN_INCREMENT {
                    return Err(Error::NoConvergence {
                        iterations: total_iter,
                        residual: res,
                    });
                }
            }
        }
        tau = (reached + increment).min(1.0);
    }
}

/// Increasing `f` on `(lo, hi)`: the point where it crosses `target`,
/// clamped to the interval ends.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, target: f64) -> f64 {
    let width = hi - lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs() + 1e-16 * width {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Interaction of a 2x2 collapsed table from its upper-column cells `p01`,
/// `p11` and row masses `m0`, `m1`, with column mass `up` above the cut.
fn collapsed_gamma(fam: DivergenceFamily, p01: f64, p11: f64, m0: f64, m1: f64, up: f64) -> f64 {
    let f = |num: f64, den: f64| fam.f_unchecked(num / den);
    f(p11, m1 * up) - f(m1 - p11, m1 * (1.0 - up)) - f(p01, m0 * up) + f(m0 - p01, m0 * (1.0 - up))
}

/// With a global column logit each column cut is a separate problem in the
/// masses `a_x = P(X = x, Y > j)`, and every interaction at that cut is
/// monotone in one unknown once the earlier ones are fixed. Solves them in
/// turn and returns the table, or `None` if it is not strictly positive.
fn column_global_table(
    r: &DVector<f64>,
    c: &DVector<f64>,
    gamma: &DMatrix<f64>,
    row_type: LogitType,
    fam: DivergenceFamily,
) -> Option<DMatrix<f64>> {
    let (rows, cols) = (r.len(), c.len());
    let tail = |k: usize| r.rows(k, rows - k).sum();
    let head = |k: usize| r.rows(0, k + 1).sum();
    // upper[(x, j)] = P(X = x, Y > j).
    let mut upper = DMatrix::zeros(rows, cols - 1);
    for j in 0..cols - 1 {
        let up = c.rows(j + 1, cols - j - 1).sum();
        let g = |i: usize| gamma[(i, j)];
        let a: Vec<f64> = match row_type {
            LogitType::G | LogitType::C => {
                // Tail masses t_i = sum_{x > i} a_x.
                let mut t = vec![0.0; rows - 1];
                let mut prev = up;
                for i in 0..rows - 1 {
                    let (m0, m1) = match row_type {
                        LogitType::G => (head(i), tail(i + 1)),
                        _ => (r[i], tail(i + 1)),
                    };
                    let rest = if row_type == LogitType::G { up } else { prev };
                    let f = |x: f64| collapsed_gamma(fam, rest - x, x, m0, m1, up);
                    t[i] = bisect(f, (rest - m0).max(0.0), m1.min(rest), g(i));
                    prev = t[i];
                }
                (0..rows)
                    .map(|x| {
                        let above = if x == 0 { up } else { t[x - 1] };
                        let below = if x == rows - 1 { 0.0 } else { t[x] };
                        above - below
                    })
                    .collect()
            }
            LogitType::R => {
                // From the last row up: a_{i+1} given h_{i+1} = sum_{x <= i+1} a_x.
                let mut a = vec![0.0; rows];
                let mut rest = up;
                for i in (0..rows - 1).rev() {
                    let (m0, m1) = (head(i), r[i + 1]);
                    let f = |x: f64| collapsed_gamma(fam, rest - x, x, m0, m1, up);
                    a[i + 1] = bisect(f, (rest - m0).max(0.0), m1.min(rest), g(i));
                    rest -= a[i + 1];
                }
                a[0] = rest;
                a
            }
            LogitType::L => {
                // Shooting on a_0: each a_{i+1} increases with a_i, and so
                // does the total.
                let chain = |a0: f64| {
                    let mut a = vec![a0; rows];
                    for i in 0..rows - 1 {
                        let (m0, m1, p01) = (r[i], r[i + 1], a[i]);
                        let f = |x: f64| collapsed_gamma(fam, p01, x, m0, m1, up);
                        a[i + 1] = bisect(f, 0.0, m1, g(i));
                    }
                    a
                };
                let a0 = bisect(|a0| chain(a0).iter().sum(), 0.0, r[0], up);
                chain(a0)
            }
        };
        for x in 0..rows {
            upper[(x, j)] = a[x];
        }
    }
    let pi = DMatrix::from_fn(rows, cols, |x, j| {
        let above = if j == 0 { r[x] } else { upper[(x, j - 1)] };
        let below = if j == cols - 1 { 0.0 } else { upper[(x, j)] };
        above - below
    });
    pi.iter().all(|&v| v > 0.0 && v.is_finite()).then_some(pi)
}

/// Exact start for pairs with at least one global logit.
fn global_start(
    r: &DVector<f64>,
    c: &DVector<f64>,
    gamma: &DMatrix<f64>,
    pair: (LogitType, LogitType),
    fam: DivergenceFamily,
) -> Option<DMatrix<f64>> {
    match pair {
        (row_type, LogitType::G) => column_global_table(r, c, gamma, row_type, fam),
        (LogitType::G, col_type) => {
            column_global_table(c, r, &gamma.transpose(), col_type, fam).map(|t| t.transpose())
        }
        _ => None,
    }
}

/// Levenberg-Marquardt on the residual norm from `start`. Slower than Newton
/// but does not stall where the Jacobian is nearly singular.
fn levenberg_marquardt(
    targets: &Targets<'_>,
    start: &CanonicalParam,
) -> std::result::Result<(CanonicalParam, f64, usize), f64> {
    let mut param = start.clone();
    let mut pi = param.prob_matrix();
    let mut res = targets.residual(&pi).map_err(|_| f64::INFINITY)?;
    let mut norm = res.norm();
    let mut damping = 1e-3;
    for iter in 0..MAX_LM {
        if sup(&res) <= RECONSTRUCT_TOL {
            return Ok((param, sup(&res), iter));
        }
        let pv = param.prob_vec();
        let jac = targets.jacobian(&pi).map_err(|_| sup(&res))? * param.prob_jacobian(&pv);
        let jtj = jac.tr_mul(&jac);
        let jtr = jac.tr_mul(&res);
        loop {
            let mut lhs = jtj.clone();
            for k in 0..lhs.nrows() {
                lhs[(k, k)] += damping * jtj[(k, k)].max(1e-12);
            }
            let step = lhs.cholesky().map(|c| c.solve(&jtr));
            if let Some(step) = step {
                let trial = param.with_theta(&param.theta - &step);
                let tp = trial.prob_matrix();
                if let Ok(tr) = targets.residual(&tp) {
                    let tn = tr.norm();
                    if tn.is_finite() && tn < norm {
                        param = trial;
                        pi = tp;
                        res = tr;
                        norm = tn;
                        damping = (damping / 3.0).max(1e-12);
                        break;
                    }
                }
            }
            damping *= 4.0;
            if damping > 1e12 {
                return Err(sup(&res));
            }
        }
    }
    Err(sup(&res))
}

/// Damped Newton from `start`. Returns the solution, its residual and the
/// iteration count, or the residual where it stalled.
fn newton(
    targets: &Targets<'_>,
    start: &CanonicalParam,
) -> std::result::Result<(CanonicalParam, f64, usize), f64> {
    let mut param = start.clone();
    let mut pi = param.prob_matrix();
    let mut res = targets.residual(&pi).map_err(|_| f64::INFINITY)?;
    let mut norm = res.norm();
    for iter in 0..MAX_NEWTON {
        if sup(&res) <= RECONSTRUCT_TOL {
            return Ok((param, sup(&res), iter));
        }
        let pv = param.prob_vec();
        let jac = targets.jacobian(&pi).map_err(|_| sup(&res))? * param.prob_jacobian(&pv);
        let step = match jac.clone().lu().solve(&res) {
            Some(s) => s,
            None => jac
                .svd(true, true)
                .solve(&res, 1e-14)
                .map_err(|_| sup(&res))?,
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let trial = param.with_theta(&param.theta - &step * t);
            let tp = trial.prob_matrix();
            if let Ok(tr) = targets.residual(&tp) {
                let tn = tr.norm();
                if tn.is_finite() && tn < norm {
                    param = trial;
                    pi = tp;
                    res = tr;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if sup(&res) <= RECONSTRUCT_TOL {
        Ok((param, sup(&res), MAX_NEWTON))
    } else {
        Err(sup(&res))
    }
}
