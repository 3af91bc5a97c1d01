//! One step of the regression form of the Aitchison-Silvey algorithm.
//!
//! With score `s0`, information `F0`, constraint residual `h0` and
//! `H0 = dh'/dtheta`, the constrained maximizer of the quadratic
//! approximation of the log-likelihood under the linearized constraints is
//!
//! ```text
//! v = X (X' F0 X)^{-1} X' F0 (H0^- h0 + F0^{-1} s0),   H0^- = H0 (H0' H0)^{-1}
//! ```
//!
//! where the columns of `X` span the orthogonal complement of the columns of
//! `H0`. The update moves along `theta(t) = theta0 + t (v - H0^- h0)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::rank::DeflationPlan;

use super::constraints::ConstraintSystem;
use super::param::{score_info, CanonicalParam};

/// Relative tolerance for declaring a constraint gradient dependent on the
/// ones before it.
pub const DEPENDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct AsStep {
    /// `v - H0^- h0`, the search direction in `theta`.
    pub direction: DVector<f64>,
    pub v_hat: DVector<f64>,
    pub score: DVector<f64>,
    pub info: DMatrix<f64>,
    /// Full residual (dependent rows included).
    pub h0: DVector<f64>,
    /// Full Jacobian `dh/dtheta'`.
    pub jacobian: DMatrix<f64>,
    /// Indices of the constraints kept as independent.
    pub independent: Vec<usize>,
    /// Orthonormal basis of the complement of the kept constraint gradients.
    pub null_basis: DMatrix<f64>,
    pub plan: Option<DeflationPlan>,
}

impl AsStep {
    /// Number of independent constraints at `theta0`.
    pub fn dof(&self) -> usize {
        self.independent.len()
    }

    /// `X' s0`, the score projected on the tangent space of the constraints.
    pub fn projected_score(&self) -> DVector<f64> {
        self.null_basis.tr_mul(&self.score)
    }
}

/// Greedy Gram-Schmidt over the rows of `jac`: returns the indices of rows
/// not in the span of the rows kept before them.
pub fn independent_rows(jac: &DMatrix<f64>, tol: f64) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    let scale = jac.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return kept;
    }
    for (idx, row) in jac.row_iter().enumerate() {
        let mut v = row.transpose();
        let norm0 = v.norm();
        // Two passes for numerical orthogonality.
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > tol * scale && norm > tol * norm0 {
            basis.push(v / norm);
            kept.push(idx);
        }
    }
    kept
}

/// Orthonormal basis of the orthogonal complement of the columns of `h`
/// (`p x q`, full column rank).
pub fn null_space_basis(h: &DMatrix<f64>) -> DMatrix<f64> {
    let p = h.nrows();
    let q = h.ncols();
    if q == 0 {
        return DMatrix::identity(p, p);
    }
    let gram = h * h.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut x = DMatrix::zeros(p, p - q);
    for (col, &idx) in order.iter().take(p - q).enumerate() {
        x.set_column(col, &eig.eigenvectors.column(idx));
    }
    x
}

fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    a.clone()
        .svd(true, true)
        .solve(b, 1e-14 * a.amax())
        .map_err(|e| Error::Domain(format!("singular system: {e}")))
}

/// Computes the regression step at `p0` for counts `y` (row-major).
pub fn as_step(p0: &CanonicalParam, y: &DVector<f64>, system: &ConstraintSystem) -> Result<AsStep> {
    let (score, info) = score_info(p0, y)?;
    let eval = system.evaluate_with_jacobian(p0)?;
    let independent = independent_rows(&eval.jacobian, DEPENDENCE_TOL);
    let p = p0.theta.len();

    // H is p x q with one column per kept constraint.
    let h_mat = DMatrix::from_fn(p, independent.len(), |r, c| {
        eval.jacobian[(independent[c], r)]
    });
    let h0_kept = DVector::from_iterator(independent.len(), independent.iter().map(|&i| eval.h[i]));

    let correction = if independent.is_empty() {
        DVector::zeros(p)
    } else {
        let gram = h_mat.tr_mul(&h_mat);
        &h_mat * solve_spd(&gram, &h0_kept)?
    };
    let newton = solve_spd(&info, &score)?;
    let target = &correction + newton;

    let x = null_space_basis(&h_mat);
    let v_hat = if x.ncols() == 0 {
        DVector::zeros(p)
    } else {
        let fx = &info * &x;
        let reduced = x.tr_mul(&fx);
        let rhs = fx.tr_mul(&target);
        &x * solve_spd(&reduced, &rhs)?
    };
    let direction = &v_hat - &correction;
    Ok(AsStep {
        direction,
        v_hat,
        score,
        info,
        h0: eval.h,
        jacobian: eval.jacobian,
        independent,
        null_basis: x,
        plan: eval.plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::DivergenceFamily;
    use crate::estimation::spec::ModelSpec;
    use crate::table::LogitType;

    #[test]
    fn unconstrained_step_is_fisher_scoring() {
        let y = DVector::from_vec(vec![12.0, 5.0, 7.0, 3.0, 9.0, 14.0, 6.0, 2.0, 11.0]);
        let p0 = CanonicalParam::zeros(3, 3);
        let spec = ModelSpec::new(LogitType::L, LogitType::L, DivergenceFamily::Kl, 2);
        let sys = ConstraintSystem::new(&spec, 3, 3).unwrap();
        let step = as_step(&p0, &y, &sys).unwrap();
        let (s, f) = score_info(&p0, &y).unwrap();
        let scoring = f.cholesky().unwrap().solve(&s);
        assert!((step.direction - scoring).amax() < 1e-10);
        assert_eq!(step.null_basis.shape(), (8, 8));
    }

    #[test]
    fn stationary_point_gives_zero_step() {
        // Saturated fit at the empirical table: h is empty and the score zero.
        let y = DVector::from_vec(vec![12.0, 5.0, 7.0, 3.0, 9.0, 14.0, 6.0, 2.0, 11.0]);
        let pi = nalgebra::DMatrix::from_row_slice(3, 3, (y.clone() / y.sum()).as_slice());
        let p0 = CanonicalParam::from_probs(&pi).unwrap();
        let spec = ModelSpec::new(LogitType::G, LogitType::G, DivergenceFamily::Kl, 2);
        let sys = ConstraintSystem::new(&spec, 3, 3).unwrap();
        let step = as_step(&p0, &y, &sys).unwrap();
        assert!(step.direction.amax() < 1e-10);
    }

    #[test]
    fn dependent_rows_are_dropped() {
        let jac = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(independent_rows(&jac, DEPENDENCE_TOL), vec![0, 2]);
        let x = null_space_basis(&DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
        ));
        assert_eq!(x.shape(), (3, 1));
        assert!((x[(0, 0)]).abs() < 1e-12);
        assert!((x[(1, 0)] + x[(2, 0)]).abs() < 1e-12);
    }
}
