//! The constraint vector `h(theta)` of a model and its derivative.
//!
//! `h` stacks the rank residual of the interaction matrix (when the model
//! needs one) followed by the linear restrictions on
//! `z = (row logits, column logits, vec(gamma))`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::interactions::{marginal_logits_with_jacobian, Margin, PairGeometry};
use crate::rank::{rank_residual, rank_residual_jacobian, residual_with_plan, DeflationPlan};

use super::param::CanonicalParam;
use super::spec::{LinearConstraint, ModelSpec};

/// `h` and its Jacobian `dh/dtheta'` (one row per constraint). The matrix
/// called `H` in the regression algorithm is the transpose of `jacobian`.
#[derive(Debug, Clone)]
pub struct ConstraintEval {
    pub h: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub plan: Option<DeflationPlan>,
}

/// Precomputed structure of a model's constraints on a table of fixed shape.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    spec: ModelSpec,
    rows: usize,
    cols: usize,
    geometry: PairGeometry,
    uses_rank: bool,
    linear: DMatrix<f64>,
    offset: DVector<f64>,
}

impl ConstraintSystem {
    pub fn new(spec: &ModelSpec, rows: usize, cols: usize) -> Result<Self> {
        spec.validate(rows, cols)?;
        let (linear, offset) = linear_rows(spec, rows, cols);
        Ok(Self {
            spec: spec.clone(),
            rows,
            cols,
            geometry: PairGeometry::new(rows, cols, spec.rows_logit, spec.cols_logit),
            uses_rank: spec.uses_rank_residual(rows, cols),
            linear,
            offset,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn rank_len(&self) -> usize {
        if self.uses_rank {
            (self.rows - 1 - self.spec.rank) * (self.cols - 1 - self.spec.rank)
        } else {
            0
        }
    }

    /// Total number of scalar constraints, dependent ones included.
    pub fn len(&self) -> usize {
        self.rank_len() + self.linear.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn z_vector(&self, pi: &DMatrix<f64>, gamma: &DMatrix<f64>) -> Result<DVector<f64>> {
        let (er, _) = marginal_logits_with_jacobian(pi, self.spec.rows_logit, Margin::Row)?;
        let (ec, _) = marginal_logits_with_jacobian(pi, self.spec.cols_logit, Margin::Column)?;
        let g = gamma.transpose();
        Ok(DVector::from_iterator(
            er.len() + ec.len() + g.len(),
            er.iter().chain(ec.iter()).chain(g.iter()).copied(),
        ))
    }

    /// `h(theta)`. With a plan the rank residual reuses its pivots; without
    /// one, pivots are selected afresh.
    pub fn evaluate(
        &self,
        param: &CanonicalParam,
        plan: Option<&DeflationPlan>,
    ) -> Result<DVector<f64>> {
        let pi = param.prob_matrix();
        let needs_gamma = self.uses_rank || self.linear.nrows() > 0;
        if !needs_gamma {
            return Ok(DVector::zeros(0));
        }
        let gamma = self.geometry.gamma(&pi, self.spec.family)?;
        let mut parts = Vec::with_capacity(self.len());
        if self.uses_rank {
            let r = match plan {
                Some(plan) => residual_with_plan(&gamma, plan)?,
                None => rank_residual(&gamma, self.spec.rank)?.0,
            };
            parts.extend(r.iter());
        }
        if self.linear.nrows() > 0 {
            let z = self.z_vector(&pi, &gamma)?;
            parts.extend((&self.linear * z - &self.offset).iter());
        }
        Ok(DVector::from_vec(parts))
    }

    /// `h` together with its Jacobian, choosing fresh pivots.
    pub fn evaluate_with_jacobian(&self, param: &CanonicalParam) -> Result<ConstraintEval> {
        let p = param.theta.len();
        if self.is_empty() {
            return Ok(ConstraintEval {
                h: DVector::zeros(0),
                jacobian: DMatrix::zeros(0, p),
                plan: None,
            });
        }
        let pi_vec = param.prob_vec();
        let pi = DMatrix::from_row_slice(self.rows, self.cols, pi_vec.as_slice());
        let dpi = param.prob_jacobian(&pi_vec);
        let gamma = self.geometry.gamma(&pi, self.spec.family)?;
        let jgamma = self.geometry.gamma_jacobian(&pi, self.spec.family)?;

        let cells = self.rows * self.cols;
        let mut h = Vec::with_capacity(self.len());
        let mut jac_pi = DMatrix::zeros(self.len(), cells);
        let mut plan = None;
        let mut row = 0;
        if self.uses_rank {
            let (r, pl) = rank_residual(&gamma, self.spec.rank)?;
            let jr = rank_residual_jacobian(&gamma, &pl)? * &jgamma;
            jac_pi.rows_mut(0, r.len()).copy_from(&jr);
            row = r.len();
            h.extend(r.iter());
            plan = Some(pl);
        }
        if self.linear.nrows() > 0 {
            let (er, jr) = marginal_logits_with_jacobian(&pi, self.spec.rows_logit, Margin::Row)?;
            let (ec, jc) =
                marginal_logits_with_jacobian(&pi, self.spec.cols_logit, Margin::Column)?;
            let gv = gamma.transpose();
            let z = DVector::from_iterator(
                er.len() + ec.len() + gv.len(),
                er.iter().chain(ec.iter()).chain(gv.iter()).copied(),
            );
            let mut jz = DMatrix::zeros(z.len(), cells);
            jz.rows_mut(0, er.len()).copy_from(&jr);
            jz.rows_mut(er.len(), ec.len()).copy_from(&jc);
            jz.rows_mut(er.len() + ec.len(), gv.len())
                .copy_from(&jgamma);
            h.extend((&self.linear * &z - &self.offset).iter());
            jac_pi
                .rows_mut(row, self.linear.nrows())
                .copy_from(&(&self.linear * jz));
        }
        Ok(ConstraintEval {
            h: DVector::from_vec(h),
            jacobian: jac_pi * dpi,
            plan,
        })
    }
}

/// Free-function form: constraint residual and `H = dh'/dtheta` (one column
/// per constraint).
pub fn constraint_eval(
    param: &CanonicalParam,
    spec: &ModelSpec,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let sys = ConstraintSystem::new(spec, param.rows(), param.cols())?;
    let e = sys.evaluate_with_jacobian(param)?;
    Ok((e.h, e.jacobian.transpose()))
}

/// Rows of the linear restrictions on `z`.
fn linear_rows(spec: &ModelSpec, rows: usize, cols: usize) -> (DMatrix<f64>, DVector<f64>) {
    let (nr, nc) = (rows - 1, cols - 1);
    let z_len = nr + nc + nr * nc;
    let row_at = |i: usize| i;
    let col_at = |j: usize| nr + j;
    let gamma_at = |i: usize, j: usize| nr + nc + i * nc + j;

    let mut coeffs: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut offsets: Vec<f64> = Vec::new();
    let mut custom: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::new();
    for c in &spec.constraints {
        match c {
            LinearConstraint::MarginalHomogeneity => {
                for i in 0..nr {
                    coeffs.push(vec![(row_at(i), 1.0), (col_at(i), -1.0)]);
                }
            }
            LinearConstraint::MarginalShift => {
                for i in 0..nr.saturating_sub(1) {
                    coeffs.push(vec![
                        (row_at(i + 1), 1.0),
                        (col_at(i + 1), -1.0),
                        (row_at(i), -1.0),
                        (col_at(i), 1.0),
                    ]);
                }
            }
            LinearConstraint::RowEffects => {
                for i in 0..nr {
                    for j in 0..nc - 1 {
                        coeffs.push(vec![(gamma_at(i, j), 1.0), (gamma_at(i, j + 1), -1.0)]);
                    }
                }
            }
            LinearConstraint::ColumnEffects => {
                for i in 0..nr - 1 {
                    for j in 0..nc {
                        coeffs.push(vec![(gamma_at(i, j), 1.0), (gamma_at(i + 1, j), -1.0)]);
                    }
                }
            }
            LinearConstraint::Custom { matrix, offset } => {
                custom.push((matrix.clone(), offset.clone()))
            }
        }
        offsets.resize(coeffs.len(), 0.0);
    }
    let k = coeffs.len() + custom.iter().map(|(m, _)| m.nrows()).sum::<usize>();
    let mut a = DMatrix::zeros(k, z_len);
    let mut b = DVector::zeros(k);
    for (r, entries) in coeffs.iter().enumerate() {
        for &(c, v) in entries {
            a[(r, c)] += v;
        }
        b[r] = offsets[r];
    }
    let mut r = coeffs.len();
    for (m, o) in custom {
        a.rows_mut(r, m.nrows()).copy_from(&m);
        b.rows_mut(r, o.len()).copy_from(&o);
        r += m.nrows();
    }
    (a, b)
}
