//! Positive-dependence diagnostics and the known implications between
//! nonnegative scaled interactions and nonnegative log-odds ratios.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::divergence::DivergenceFamily;
use crate::error::Result;
use crate::interactions::PairGeometry;
use crate::table::LogitType;

/// Entries above `-NONNEG_TOL` count as nonnegative.
pub const NONNEG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDependence {
    pub pair: String,
    pub gamma_min: f64,
    pub eta_min: f64,
    pub gamma_nonnegative: bool,
    pub eta_nonnegative: bool,
}

impl PairDependence {
    /// Nonnegative interactions whose log-odds ratios are not all nonnegative.
    pub fn gamma_without_eta(&self) -> bool {
        self.gamma_nonnegative && !self.eta_nonnegative
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceReport {
    pub pairs: Vec<PairDependence>,
    /// Row-conditional survival functions are nondecreasing in the row.
    pub stochastic_order: bool,
    /// Every collapsed 2x2 table has the larger survival in its second row.
    pub quadrant_dependence: bool,
    /// Descriptions of any implication that failed on this table.
    pub violations: Vec<String>,
}

fn pair_name(l1: LogitType, l2: LogitType) -> String {
    format!("{}{}", l1.as_char(), l2.as_char())
}

fn nonneg(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&v| v >= -NONNEG_TOL)
}

fn matrix_min(m: &DMatrix<f64>) -> f64 {
    m.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `s_ij = P(Y > j | X = i)`, `I1 x (I2 - 1)`.
pub fn row_survival(pi: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = pi.shape();
    DMatrix::from_fn(r, c - 1, |i, j| {
        let row = pi.row(i);
        row.columns(j + 1, c - j - 1).sum() / row.sum()
    })
}

/// Whether `s_ij <= s_i+1,j` for every row and cut.
pub fn stochastic_order(pi: &DMatrix<f64>) -> bool {
    let s = row_survival(pi);
    (0..s.nrows() - 1).all(|i| (0..s.ncols()).all(|j| s[(i, j)] <= s[(i + 1, j)] + NONNEG_TOL))
}

/// `S_iju = P(Y > j | X in the u-side of cut i)` on global events, as a pair
/// of `(I1 - 1) x (I2 - 1)` matrices for `u = 0, 1`.
pub fn collapsed_survival(pi: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (r, c) = pi.shape();
    let block = |r0: usize, nr: usize, c0: usize, nc: usize| pi.view((r0, c0), (nr, nc)).sum();
    let low = DMatrix::from_fn(r - 1, c - 1, |i, j| {
        block(0, i + 1, j + 1, c - j - 1) / block(0, i + 1, 0, c)
    });
    let high = DMatrix::from_fn(r - 1, c - 1, |i, j| {
        block(i + 1, r - i - 1, j + 1, c - j - 1) / block(i + 1, r - i - 1, 0, c)
    });
    (low, high)
}

/// Whether `s_ij <= S_ij1`: each row is stochastically below the rows after
/// it taken together.
pub fn row_below_later_rows(pi: &DMatrix<f64>) -> bool {
    let s = row_survival(pi);
    let (_, high) = collapsed_survival(pi);
    (0..high.nrows()).all(|i| (0..high.ncols()).all(|j| s[(i, j)] <= high[(i, j)] + NONNEG_TOL))
}

/// Whether `S_ij0 <= S_ij1` at every cut pair.
pub fn quadrant_dependence(pi: &DMatrix<f64>) -> bool {
    let (low, high) = collapsed_survival(pi);
    low.iter()
        .zip(high.iter())
        .all(|(a, b)| *a <= b + NONNEG_TOL)
}

/// Interactions and log-odds ratios of one pair.
pub fn pair_matrices(
    pi: &DMatrix<f64>,
    l1: LogitType,
    l2: LogitType,
    fam: DivergenceFamily,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let geo = PairGeometry::new(pi.nrows(), pi.ncols(), l1, l2);
    Ok((geo.gamma(pi, fam)?, geo.lor(pi)?))
}

fn summarize(
    pi: &DMatrix<f64>,
    l1: LogitType,
    l2: LogitType,
    fam: DivergenceFamily,
) -> Result<PairDependence> {
    let (g, e) = pair_matrices(pi, l1, l2, fam)?;
    Ok(PairDependence {
        pair: pair_name(l1, l2),
        gamma_min: matrix_min(&g),
        eta_min: matrix_min(&e),
        gamma_nonnegative: nonneg(&g),
        eta_nonnegative: nonneg(&e),
    })
}

/// Checks every known implication from nonnegative scaled interactions to
/// nonnegative log-odds ratios and orderings. Returns one message per
/// implication whose premise holds and whose conclusion fails.
pub fn implication_violations(pi: &DMatrix<f64>, fam: DivergenceFamily) -> Result<Vec<String>> {
    use LogitType::{C, G, L};
    let mut out = Vec::new();
    let gamma_ok = |l1, l2| -> Result<bool> { Ok(nonneg(&pair_matrices(pi, l1, l2, fam)?.0)) };
    let eta_ok = |l1, l2| -> Result<bool> {
        let geo = PairGeometry::new(pi.nrows(), pi.ncols(), l1, l2);
        Ok(nonneg(&geo.lor(pi)?))
    };
    for (l1, l2) in LogitType::all_pairs() {
        if (l1 == G || l2 == G) && gamma_ok(l1, l2)? && !eta_ok(l1, l2)? {
            out.push(format!(
                "gamma {0} >= 0 but eta {0} has a negative entry",
                pair_name(l1, l2)
            ));
        }
    }
    if gamma_ok(L, L)? {
        for (a, b) in [(L, G), (G, L)] {
            if !eta_ok(a, b)? {
                out.push(format!(
                    "gamma LL >= 0 but eta {} has a negative entry",
                    pair_name(a, b)
                ));
            }
        }
    }
    if gamma_ok(L, C)? {
        for (a, b) in [(L, G), (G, G)] {
            if !eta_ok(a, b)? {
                out.push(format!(
                    "gamma LC >= 0 but eta {} has a negative entry",
                    pair_name(a, b)
                ));
            }
        }
    }
    if gamma_ok(C, C)? {
        if !eta_ok(G, G)? {
            out.push("gamma CC >= 0 but eta GG has a negative entry".into());
        }
        if !row_below_later_rows(pi) {
            out.push(
                "gamma CC >= 0 but some row is not stochastically below the rows after it".into(),
            );
        }
        if !quadrant_dependence(pi) {
            out.push("gamma CC >= 0 but quadrant dependence fails".into());
        }
    }
    Ok(out)
}

/// Minima and flags for each requested pair, plus ordering checks and any
/// failed implication.
pub fn dependence_report(
    pi: &DMatrix<f64>,
    fam: DivergenceFamily,
    pairs: &[(LogitType, LogitType)],
) -> Result<DependenceReport> {
    let pairs = pairs
        .iter()
        .map(|&(l1, l2)| summarize(pi, l1, l2, fam))
        .collect::<Result<Vec<_>>>()?;
    Ok(DependenceReport {
        pairs,
        stochastic_order: stochastic_order(pi),
        quadrant_dependence: quadrant_dependence(pi),
        violations: implication_violations(pi, fam)?,
    })
}
