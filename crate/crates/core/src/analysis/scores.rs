use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::ScoreNormalization;
use crate::interactions::InteractionMatrix;
use crate::table::ContingencyTable;

/// Singular values below this fraction of the largest are treated as zero.
pub const SCORE_RANK_TOL: f64 = 1e-10;

/// Association parameters and row/column scores of a rank-K interaction
/// matrix, `gamma_ij = sum_k psi_k (mu_k,i+1 - mu_k,i)(nu_k,j+1 - nu_k,j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreDecomposition {
    pub psi: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    #[serde(skip)]
    pub normalization: ScoreNormalization,
}

impl ScoreDecomposition {
    pub fn rank(&self) -> usize {
        self.psi.len()
    }

    /// Interaction matrix implied by the scores.
    pub fn interactions(&self) -> DMatrix<f64> {
        let r = self.mu.first().map_or(0, |m| m.len().saturating_sub(1));
        let c = self.nu.first().map_or(0, |n| n.len().saturating_sub(1));
        let mut g = DMatrix::zeros(r, c);
        for k in 0..self.rank() {
            for i in 0..r {
                for j in 0..c {
                    g[(i, j)] += self.psi[k]
                        * (self.mu[k][i + 1] - self.mu[k][i])
                        * (self.nu[k][j + 1] - self.nu[k][j]);
                }
            }
        }
        g
    }
}

/// Integrates increments to scores and standardizes them with weights `w`.
/// Returns the scores and the factor by which the increments shrank.
fn standardize(increments: &[f64], w: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut s = Vec::with_capacity(increments.len() + 1);
    s.push(0.0);
    for d in increments {
        s.push(s.last().unwrap() + d);
    }
    let total: f64 = w.iter().sum();
    let mean = s.iter().zip(w).map(|(x, p)| x * p).sum::<f64>() / total;
    let var = s
        .iter()
        .zip(w)
        .map(|(x, p)| p * (x - mean).powi(2))
        .sum::<f64>()
        / total;
    if !(var > 0.0) {
        return Err(Error::Degenerate(
            "scores have zero weighted variance".into(),
        ));
    }
    let sd = var.sqrt();
    Ok((s.iter().map(|x| (x - mean) / sd).collect(), sd))
}

/// Scores from the rank-`k` singular value decomposition of `gamma`, in the
/// weighted convention of `pi`'s margins. Components with negligible
/// singular values are omitted, so fewer than `k` may be returned.
pub fn svd_scores_matrix(
    gamma: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    k: usize,
) -> Result<ScoreDecomposition> {
    let (r, c) = gamma.shape();
    if pi.nrows() != r + 1 || pi.ncols() != c + 1 {
        return Err(Error::Dimension(format!(
            "interactions {r}x{c} do not match a {}x{} table",
            pi.nrows(),
            pi.ncols()
        )));
    }
    let row_w: Vec<f64> = pi.row_iter().map(|x| x.sum()).collect();
    let col_w: Vec<f64> = pi.column_iter().map(|x| x.sum()).collect();
    let mut out = ScoreDecomposition {
        psi: Vec::new(),
        mu: Vec::new(),
        nu: Vec::new(),
        normalization: ScoreNormalization::Weighted,
    };
    if r == 0 || c == 0 || gamma.amax() == 0.0 {
        return Ok(out);
    }
    let svd = gamma.clone().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = svd.singular_values[order[0]];
    for &idx in order.iter().take(k) {
        let sigma = svd.singular_values[idx];
        if sigma <= SCORE_RANK_TOL * top {
            break;
        }
        let du: Vec<f64> = u.column(idx).iter().copied().collect();
        let dv: Vec<f64> = vt.row(idx).iter().copied().collect();
        let (mut mu, su) = standardize(&du, &row_w)?;
        let (mut nu, sv) = standardize(&dv, &col_w)?;
        if mu[mu.len() - 1] < mu[0] {
            mu.iter_mut().for_each(|x| *x = -*x);
            nu.iter_mut().for_each(|x| *x = -*x);
        }
        out.psi.push(sigma * su * sv);
        out.mu.push(mu);
        out.nu.push(nu);
    }
    Ok(out)
}

/// Scores of a fitted interaction matrix, weighted by the margins of `t`.
pub fn svd_scores(
    gamma: &InteractionMatrix,
    t: &ContingencyTable,
    k: usize,
) -> Result<ScoreDecomposition> {
    svd_scores_matrix(&gamma.values, t.pi(), k)
}

/// Correlation of the first row and column scores under `pi`.
pub fn score_correlation(pi: &DMatrix<f64>, sd: &ScoreDecomposition) -> Result<f64> {
    let (mu, nu) = match (sd.mu.first(), sd.nu.first()) {
        (Some(m), Some(n)) => (m, n),
        _ => {
            return Err(Error::Degenerate(
                "correlation needs at least one score component".into(),
            ))
        }
    };
    if mu.len() != pi.nrows() || nu.len() != pi.ncols() {
        return Err(Error::Dimension("scores do not match the table".into()));
    }
    let total = pi.sum();
    let mut mx = 0.0;
    let mut my = 0.0;
    for i in 0..pi.nrows() {
        for j in 0..pi.ncols() {
            mx += pi[(i, j)] * mu[i];
            my += pi[(i, j)] * nu[j];
        }
    }
    mx /= total;
    my /= total;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..pi.nrows() {
        for j in 0..pi.ncols() {
            let (dx, dy) = (mu[i] - mx, nu[j] - my);
            sxy += pi[(i, j)] * dx * dy;
            sxx += pi[(i, j)] * dx * dx;
            syy += pi[(i, j)] * dy * dy;
        }
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::Degenerate("scores have zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn uniform(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, n, 1.0 / (n * n) as f64)
    }

    #[test]
    fn recovers_constructed_scores() {
        // mu = nu = (-1, 0, 1), psi = 2; increments are all one.
        let gamma = DMatrix::from_element(2, 2, 2.0);
        let sd = svd_scores_matrix(&gamma, &uniform(3), 1).unwrap();
        // Weighted sd of (-1, 0, 1) under uniform weights is sqrt(2/3).
        let s = (2.0f64 / 3.0).sqrt();
        assert_relative_eq!(sd.psi[0], 2.0 * s * s, epsilon = 1e-12);
        for (a, b) in sd.mu[0].iter().zip([-1.0, 0.0, 1.0]) {
            assert_relative_eq!(*a, b / s, epsilon = 1e-12);
        }
        for (a, b) in sd.nu[0].iter().zip([-1.0, 0.0, 1.0]) {
            assert_relative_eq!(*a, b / s, epsilon = 1e-12);
        }
        assert!((sd.interactions() - gamma).amax() < 1e-12);
    }

    #[test]
    fn sign_follows_last_row_score() {
        let gamma = DMatrix::from_row_slice(2, 2, &[-1.0, -2.0, -0.5, -1.0]);
        let pi = uniform(3);
        let sd = svd_scores_matrix(&gamma, &pi, 1).unwrap();
        assert!(sd.psi[0] > 0.0);
        assert!(sd.mu[0][2] >= sd.mu[0][0]);
        assert!(sd.nu[0][2] < sd.nu[0][0]);
        assert!((sd.interactions() - gamma).amax() < 1e-12);
    }

    #[test]
    fn zero_interactions_have_no_components() {
        let sd = svd_scores_matrix(
            &DMatrix::zeros(2, 3),
            &DMatrix::from_element(3, 4, 1.0 / 12.0),
            2,
        )
        .unwrap();
        assert_eq!(sd.rank(), 0);
        assert!(score_correlation(&uniform(3), &sd).is_err());
    }

    #[test]
    fn correlation_examples() {
        // Diagonal mass 0.9, the rest on cells next to the diagonal.
        let pi = DMatrix::from_row_slice(
            3,
            3,
            &[0.44, 0.025, 0.0, 0.025, 0.02, 0.025, 0.0, 0.025, 0.44],
        );
        let sd = ScoreDecomposition {
            psi: vec![1.0],
            mu: vec![vec![1.0, 2.0, 3.0]],
            nu: vec![vec![1.0, 2.0, 3.0]],
            normalization: ScoreNormalization::Weighted,
        };
        assert!(score_correlation(&pi, &sd).unwrap() > 0.9);
        let indep = DVector::from_vec(vec![0.2, 0.3, 0.5])
            * DVector::from_vec(vec![0.5, 0.1, 0.4]).transpose();
        assert!(score_correlation(&indep, &sd).unwrap().abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn correlation_is_affine_invariant(
            w in proptest::collection::vec(0.01f64..1.0, 12),
            mu in proptest::collection::vec(-3.0f64..3.0, 3),
            nu in proptest::collection::vec(-3.0f64..3.0, 4),
            a in 0.1f64..10.0, b in -5.0f64..5.0, c in 0.1f64..10.0, d in -5.0f64..5.0,
        ) {
            let pi = DMatrix::from_row_slice(3, 4, &w);
            let sd = ScoreDecomposition { psi: vec![1.0], mu: vec![mu.clone()], nu: vec![nu.clone()], normalization: ScoreNormalization::Weighted };
            let moved = ScoreDecomposition {
                psi: vec![1.0],
                mu: vec![mu.iter().map(|x| a * x + b).collect()],
                nu: vec![nu.iter().map(|x| c * x + d).collect()],
                normalization: ScoreNormalization::Weighted,
            };
            if let (Ok(r0), Ok(r1)) = (score_correlation(&pi, &sd), score_correlation(&pi, &moved)) {
                prop_assert!((r0 - r1).abs() <= 1e-12);
            }
        }

        #[test]
        fn scores_reproduce_rank_one_interactions(
            du in proptest::collection::vec(-2.0f64..2.0, 3),
            dv in proptest::collection::vec(-2.0f64..2.0, 2),
            w in proptest::collection::vec(0.01f64..1.0, 12),
        ) {
            let gamma = DMatrix::from_fn(3, 2, |i, j| du[i] * dv[j]);
            prop_assume!(gamma.amax() > 1e-6);
            let pi = DMatrix::from_row_slice(4, 3, &w);
            let pi = &pi / pi.sum();
            let sd = svd_scores_matrix(&gamma, &pi, 1).unwrap();
            prop_assert!((sd.interactions() - &gamma).amax() <= 1e-8);
            let m: f64 = sd.mu[0].iter().enumerate().map(|(i, x)| x * pi.row(i).sum()).sum();
            let v: f64 = sd.mu[0].iter().enumerate().map(|(i, x)| x * x * pi.row(i).sum()).sum();
            prop_assert!(m.abs() < 1e-10);
            prop_assert!((v - 1.0).abs() < 1e-10);
        }
    }
}
