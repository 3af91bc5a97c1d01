//! Marginal logits, generalized log-odds ratios and divergence-scaled
//! interactions for a chosen pair of logit types, with analytic Jacobians
//! with respect to the cell probabilities.
//!
//! For cut points `(i, j)` let `p(u, v)` be the probability of the rectangle
//! formed by the row event `E(i, u, l1)` and the column event `E(j, v, l2)`,
//! and `rho(u, v) = p(u, v) / (p1(u) p2(v))` its ratio to the product of the
//! marginal event probabilities. The scaled interaction is
//!
//! ```text
//! gamma_ij = F(rho(1,1)) - F(rho(1,0)) - F(rho(0,1)) + F(rho(0,0))
//! ```
//!
//! and the log-odds ratio `eta_ij` is the same contrast of `log p(u, v)`.
//! With the KL family the two coincide because the marginal terms cancel.
//!
//! Vectorized quantities use row-major order (column index fastest), both
//! for the cell probabilities and for interaction matrices.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::divergence::DivergenceFamily;
use crate::error::{Error, Result};
use crate::table::{event_set, ContingencyTable, EventSet, LogitType, Side};

/// Scale on which an interaction matrix is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Scale {
    Log,
    Divergence(DivergenceFamily),
}

/// `(I1 - 1) x (I2 - 1)` matrix of interactions for one logit pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub values: DMatrix<f64>,
    pub pair: (LogitType, LogitType),
    pub scale: Scale,
}

impl InteractionMatrix {
    pub fn min(&self) -> f64 {
        self.values.min()
    }

    /// Values in row-major order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.values.transpose().iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Margin {
    Row,
    Column,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalLogits {
    pub values: DVector<f64>,
    pub logit_type: LogitType,
    pub margin: Margin,
}

/// Event sets for both sides of every cut of one variable.
#[derive(Debug, Clone)]
pub(crate) struct CutSets {
    sets: Vec<[EventSet; 2]>,
}

impl CutSets {
    pub(crate) fn new(size: usize, logit: LogitType) -> Self {
        let sets = (1..size)
            .map(|x| {
                [
                    event_set(x, Side::Low, logit, size).expect("valid cut"),
                    event_set(x, Side::High, logit, size).expect("valid cut"),
                ]
            })
            .collect();
        Self { sets }
    }

    /// Zero-based cut `x`, side 0 or 1.
    #[inline]
    pub(crate) fn get(&self, x: usize, side: usize) -> EventSet {
        self.sets[x][side]
    }

    pub(crate) fn len(&self) -> usize {
        self.sets.len()
    }
}

/// Marginal logits `log p(x; 1; l) - log p(x; 0; l)` for `x = 1..I-1`.
pub fn marginal_logits(margin: &[f64], logit: LogitType, which: Margin) -> Result<MarginalLogits> {
    if margin.len() < 2 {
        return Err(Error::Dimension(
            "a margin needs at least two categories".into(),
        ));
    }
    if margin.iter().any(|&p| p <= 0.0) {
        return Err(Error::Domain(
            "marginal logits need a strictly positive margin".into(),
        ));
    }
    let cuts = CutSets::new(margin.len(), logit);
    let sum = |s: EventSet| -> f64 { margin[s.range0()].iter().sum() };
    let values = DVector::from_iterator(
        cuts.len(),
        (0..cuts.len()).map(|x| sum(cuts.get(x, 1)).ln() - sum(cuts.get(x, 0)).ln()),
    );
    Ok(MarginalLogits {
        values,
        logit_type: logit,
        margin: which,
    })
}

pub fn row_logits(t: &ContingencyTable, logit: LogitType) -> Result<MarginalLogits> {
    marginal_logits(t.pi_row().as_slice(), logit, Margin::Row)
}

pub fn col_logits(t: &ContingencyTable, logit: LogitType) -> Result<MarginalLogits> {
    marginal_logits(t.pi_col().as_slice(), logit, Margin::Column)
}

/// Ratio of the joint event probability to the product of the marginal
/// event probabilities at cuts `(i, j)` (1-based).
#[allow(clippy::too_many_arguments)]
pub fn rho(
    t: &ContingencyTable,
    i: usize,
    j: usize,
    u: Side,
    v: Side,
    l1: LogitType,
    l2: LogitType,
) -> Result<f64> {
    let p = t.quadrant_prob(i, j, u, v, l1, l2)?;
    let p1 = t.row_event_prob(i, u, l1)?;
    let p2 = t.col_event_prob(j, v, l2)?;
    if p1 <= 0.0 || p2 <= 0.0 {
        return Err(Error::Domain(format!(
            "zero marginal event probability at cuts ({i}, {j})"
        )));
    }
    Ok(p / (p1 * p2))
}

/// Scaled interactions `gamma(F; l1, l2)`.
pub fn gamma_matrix(
    t: &ContingencyTable,
    l1: LogitType,
    l2: LogitType,
    fam: DivergenceFamily,
) -> Result<InteractionMatrix> {
    let values = PairGeometry::new(t.rows(), t.cols(), l1, l2).gamma(t.pi(), fam)?;
    Ok(InteractionMatrix {
        values,
        pair: (l1, l2),
        scale: Scale::Divergence(fam),
    })
}

/// Generalized log-odds ratios `eta(l1, l2)`.
pub fn lor_matrix(t: &ContingencyTable, l1: LogitType, l2: LogitType) -> Result<InteractionMatrix> {
    let values = PairGeometry::new(t.rows(), t.cols(), l1, l2).lor(t.pi())?;
    Ok(InteractionMatrix {
        values,
        pair: (l1, l2),
        scale: Scale::Log,
    })
}

/// `d vec(gamma) / d vec(pi)`: one row per interaction (row-major), one
/// column per cell (row-major).
pub fn gamma_jacobian(
    t: &ContingencyTable,
    l1: LogitType,
    l2: LogitType,
    fam: DivergenceFamily,
) -> Result<DMatrix<f64>> {
    PairGeometry::new(t.rows(), t.cols(), l1, l2).gamma_jacobian(t.pi(), fam)
}

/// Two-dimensional prefix sums for O(1) rectangle masses.
struct Prefix {
    cols: usize,
    sums: Vec<f64>,
}

impl Prefix {
    fn new(pi: &DMatrix<f64>) -> Self {
        let (r, c) = pi.shape();
        let stride = c + 1;
        let mut sums = vec![0.0; (r + 1) * stride];
        for i in 0..r {
            for j in 0..c {
                sums[(i + 1) * stride + j + 1] =
                    pi[(i, j)] + sums[i * stride + j + 1] + sums[(i + 1) * stride + j]
                        - sums[i * stride + j];
            }
        }
        Self { cols: stride, sums }
    }

    #[inline]
    fn rect(&self, a: EventSet, b: EventSet) -> f64 {
        let (r0, r1) = (a.first() - 1, a.last());
        let (c0, c1) = (b.first() - 1, b.last());
        let s = |i: usize, j: usize| self.sums[i * self.cols + j];
        s(r1, c1) - s(r0, c1) - s(r1, c0) + s(r0, c0)
    }
}

/// Event geometry of one logit pair on a table of fixed shape. Reused across
/// evaluations inside the fitter.
#[derive(Debug, Clone)]
pub(crate) struct PairGeometry {
    rows: usize,
    cols: usize,
    row_cuts: CutSets,
    col_cuts: CutSets,
}

/// Per-cut quantities shared by gamma and its Jacobian.
struct CutTerms {
    p: [[f64; 2]; 2],
    p1: [f64; 2],
    p2: [f64; 2],
}

const SIGN: [[f64; 2]; 2] = [[1.0, -1.0], [-1.0, 1.0]];

// The sign table is indexed by the (u, v) side bits.
#[allow(clippy::needless_range_loop)]
impl PairGeometry {
    pub(crate) fn new(rows: usize, cols: usize, l1: LogitType, l2: LogitType) -> Self {
        Self {
            rows,
            cols,
            row_cuts: CutSets::new(rows, l1),
            col_cuts: CutSets::new(cols, l2),
        }
    }

    fn check(&self, pi: &DMatrix<f64>) -> Result<()> {
        if pi.shape() != (self.rows, self.cols) {
            return Err(Error::Dimension(format!(
                "expected a {}x{} table, got {}x{}",
                self.rows,
                self.cols,
                pi.nrows(),
                pi.ncols()
            )));
        }
        if pi.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
            return Err(Error::Domain(
                "interactions need a strictly positive table".into(),
            ));
        }
        Ok(())
    }

    fn terms(&self, prefix: &Prefix, row_m: &[f64], col_m: &[f64], i: usize, j: usize) -> CutTerms {
        let mut t = CutTerms {
            p: [[0.0; 2]; 2],
            p1: [0.0; 2],
            p2: [0.0; 2],
        };
        for u in 0..2 {
            let a = self.row_cuts.get(i, u);
            t.p1[u] = row_m[a.range0()].iter().sum();
            for v in 0..2 {
                let b = self.col_cuts.get(j, v);
                t.p[u][v] = prefix.rect(a, b);
            }
        }
        for v in 0..2 {
            t.p2[v] = col_m[self.col_cuts.get(j, v).range0()].iter().sum();
        }
        t
    }

    fn margins(pi: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
        (
            pi.row_iter().map(|r| r.sum()).collect(),
            pi.column_iter().map(|c| c.sum()).collect(),
        )
    }

    pub(crate) fn gamma(&self, pi: &DMatrix<f64>, fam: DivergenceFamily) -> Result<DMatrix<f64>> {
        self.check(pi)?;
        let prefix = Prefix::new(pi);
        let (row_m, col_m) = Self::margins(pi);
        let mut out = DMatrix::zeros(self.rows - 1, self.cols - 1);
        for i in 0..self.rows - 1 {
            for j in 0..self.cols - 1 {
                let t = self.terms(&prefix, &row_m, &col_m, i, j);
                let mut g = 0.0;
                for u in 0..2 {
                    for v in 0..2 {
                        let rho = t.p[u][v] / (t.p1[u] * t.p2[v]);
                        g += SIGN[u][v] * fam.f_unchecked(rho);
                    }
                }
                out[(i, j)] = g;
            }
        }
        Ok(out)
    }

    pub(crate) fn lor(&self, pi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(pi)?;
        let prefix = Prefix::new(pi);
        let mut out = DMatrix::zeros(self.rows - 1, self.cols - 1);
        for i in 0..self.rows - 1 {
            for j in 0..self.cols - 1 {
                let mut e = 0.0;
                for u in 0..2 {
                    for v in 0..2 {
                        let p = prefix.rect(self.row_cuts.get(i, u), self.col_cuts.get(j, v));
                        e += SIGN[u][v] * p.ln();
                    }
                }
                out[(i, j)] = e;
            }
        }
        Ok(out)
    }

    pub(crate) fn gamma_jacobian(
        &self,
        pi: &DMatrix<f64>,
        fam: DivergenceFamily,
    ) -> Result<DMatrix<f64>> {
        self.check(pi)?;
        let prefix = Prefix::new(pi);
        let (row_m, col_m) = Self::margins(pi);
        let (nr, nc) = (self.rows, self.cols);
        let mut jac = DMatrix::zeros((nr - 1) * (nc - 1), nr * nc);
        for i in 0..nr - 1 {
            for j in 0..nc - 1 {
                let r = i * (nc - 1) + j;
                let t = self.terms(&prefix, &row_m, &col_m, i, j);
                for u in 0..2 {
                    let a = self.row_cuts.get(i, u);
                    for v in 0..2 {
                        let b = self.col_cuts.get(j, v);
                        let rho = t.p[u][v] / (t.p1[u] * t.p2[v]);
                        // d F(rho) = rho F'(rho) * d log rho
                        let w = SIGN[u][v] * fam.u_f_prime(rho);
                        let wp = w / t.p[u][v];
                        for h in a.range0() {
                            for k in b.range0() {
                                jac[(r, h * nc + k)] += wp;
                            }
                        }
                        let w1 = w / t.p1[u];
                        for h in a.range0() {
                            for k in 0..nc {
                                jac[(r, h * nc + k)] -= w1;
                            }
                        }
                        let w2 = w / t.p2[v];
                        for k in b.range0() {
                            for h in 0..nr {
                                jac[(r, h * nc + k)] -= w2;
                            }
                        }
                    }
                }
            }
        }
        Ok(jac)
    }
}

/// Marginal logits of the row (or column) margin as a function of the full
/// cell vector, with their Jacobian.
pub(crate) fn marginal_logits_with_jacobian(
    pi: &DMatrix<f64>,
    logit: LogitType,
    which: Margin,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (nr, nc) = pi.shape();
    let margin: Vec<f64> = match which {
        Margin::Row => pi.row_iter().map(|r| r.sum()).collect(),
        Margin::Column => pi.column_iter().map(|c| c.sum()).collect(),
    };
    let logits = marginal_logits(&margin, logit, which)?;
    let cuts = CutSets::new(margin.len(), logit);
    let mut jac = DMatrix::zeros(cuts.len(), nr * nc);
    for x in 0..cuts.len() {
        for (side, sign) in [(0usize, -1.0), (1usize, 1.0)] {
            let set = cuts.get(x, side);
            let mass: f64 = margin[set.range0()].iter().sum();
            for cat in set.range0() {
                match which {
                    Margin::Row => {
                        for k in 0..nc {
                            jac[(x, cat * nc + k)] += sign / mass;
                        }
                    }
                    Margin::Column => {
                        for h in 0..nr {
                            jac[(x, h * nc + cat)] += sign / mass;
                        }
                    }
                }
            }
        }
    }
    Ok((logits.values, jac))
}
