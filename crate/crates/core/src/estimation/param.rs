use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Canonical parameters of the multinomial: `log pi = B theta - 1 log sum exp(B theta)`
/// for a full-rank basis `B` of size `cells x (cells - 1)` whose columns do
/// not span the unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalParam {
    pub theta: DVector<f64>,
    pub basis: DMatrix<f64>,
    rows: usize,
    cols: usize,
}

/// Cell indicators for every cell but the last, which serves as reference.
pub fn indicator_basis(cells: usize) -> DMatrix<f64> {
    DMatrix::from_fn(cells, cells - 1, |r, c| if r == c { 1.0 } else { 0.0 })
}

impl CanonicalParam {
    pub fn new(theta: DVector<f64>, basis: DMatrix<f64>, rows: usize, cols: usize) -> Result<Self> {
        if basis.nrows() != rows * cols
            || basis.ncols() != rows * cols - 1
            || theta.len() != basis.ncols()
        {
            return Err(Error::Dimension(format!(
                "basis must be {} x {} and theta of length {}",
                rows * cols,
                rows * cols - 1,
                rows * cols - 1
            )));
        }
        Ok(Self {
            theta,
            basis,
            rows,
            cols,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        let cells = rows * cols;
        Self {
            theta: DVector::zeros(cells - 1),
            basis: indicator_basis(cells),
            rows,
            cols,
        }
    }

    /// Parameters reproducing a strictly positive table under the indicator
    /// basis: `theta_c = log pi_c - log pi_last`.
    pub fn from_probs(pi: &DMatrix<f64>) -> Result<Self> {
        if pi.iter().any(|&p| p <= 0.0) {
            return Err(Error::Domain(
                "canonical parameters need a strictly positive table".into(),
            ));
        }
        let v: Vec<f64> = pi.transpose().iter().copied().collect();
        let last = v[v.len() - 1].ln();
        let theta =
            DVector::from_iterator(v.len() - 1, v[..v.len() - 1].iter().map(|p| p.ln() - last));
        Ok(Self {
            theta,
            basis: indicator_basis(v.len()),
            rows: pi.nrows(),
            cols: pi.ncols(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn with_theta(&self, theta: DVector<f64>) -> Self {
        Self {
            theta,
            basis: self.basis.clone(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Cell probabilities (row-major vector), computed with max-subtraction.
    pub fn prob_vec(&self) -> DVector<f64> {
        let eta = &self.basis * &self.theta;
        let max = eta.max();
        let mut p = eta.map(|e| (e - max).exp());
        let total = p.sum();
        p /= total;
        p
    }

    pub fn prob_matrix(&self) -> DMatrix<f64> {
        let p = self.prob_vec();
        DMatrix::from_row_slice(self.rows, self.cols, p.as_slice())
    }

    /// `d pi / d theta = (diag(pi) - pi pi') B`.
    pub fn prob_jacobian(&self, pi: &DVector<f64>) -> DMatrix<f64> {
        let mut cov = DMatrix::from_diagonal(pi);
        cov.ger(-1.0, pi, pi, 1.0);
        cov * &self.basis
    }
}

/// Maps canonical parameters to the probability table.
pub fn canonical_to_prob(p: &CanonicalParam) -> DMatrix<f64> {
    p.prob_matrix()
}

/// Score `B'(y - n pi)` and expected information `n B'(diag(pi) - pi pi') B`
/// for row-major counts `y`.
pub fn score_info(p: &CanonicalParam, y: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if y.len() != p.basis.nrows() {
        return Err(Error::Dimension(format!(
            "counts have length {}, expected {}",
            y.len(),
            p.basis.nrows()
        )));
    }
    let n = y.sum();
    let pi = p.prob_vec();
    let score = p.basis.tr_mul(&(y - &pi * n));
    let info = p.basis.tr_mul(&p.prob_jacobian(&pi)) * n;
    Ok((score, info))
}
