//! Three 3x3 tables on which nonnegative scaled interactions coexist with a
//! negative log-odds ratio of the same logit pair.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::divergence::DivergenceFamily;
use crate::error::{Error, Result};
use crate::table::LogitType;

use super::dependence::{pair_matrices, NONNEG_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Counterexample {
    LocalLocal,
    LocalContinuation,
    ContinuationContinuation,
}

impl Counterexample {
    pub const ALL: [Counterexample; 3] = [
        Counterexample::LocalLocal,
        Counterexample::LocalContinuation,
        Counterexample::ContinuationContinuation,
    ];

    pub fn pair(self) -> (LogitType, LogitType) {
        match self {
            Counterexample::LocalLocal => (LogitType::L, LogitType::L),
            Counterexample::LocalContinuation => (LogitType::L, LogitType::C),
            Counterexample::ContinuationContinuation => (LogitType::C, LogitType::C),
        }
    }

    pub fn lambda(self) -> f64 {
        match self {
            Counterexample::LocalLocal => 7.0,
            Counterexample::LocalContinuation => 5.0,
            Counterexample::ContinuationContinuation => 16.0,
        }
    }

    /// The printed probabilities (rounded to four decimals).
    pub fn table(self) -> DMatrix<f64> {
        let v: [f64; 9] = match self {
            Counterexample::LocalLocal => [
                0.1444, 0.1018, 0.0939, 0.0979, 0.1117, 0.1175, 0.0914, 0.1178, 0.1236,
            ],
            Counterexample::LocalContinuation => [
                0.1418, 0.1064, 0.0355, 0.1773, 0.1418, 0.1064, 0.1064, 0.1064, 0.0780,
            ],
            Counterexample::ContinuationContinuation => [
                0.1695, 0.0847, 0.0847, 0.1525, 0.0678, 0.0847, 0.1695, 0.0847, 0.1017,
            ],
        };
        DMatrix::from_row_slice(3, 3, &v)
    }

    /// Printed interactions and log-odds ratios, for side-by-side display.
    pub fn printed(self) -> (DMatrix<f64>, DMatrix<f64>) {
        let (g, e): ([f64; 4], [f64; 4]) = match self {
            Counterexample::LocalLocal => (
                [0.8100, 0.0900, 0.0810, 0.0090],
                [0.3365, 0.8109, 0.2136, -0.0225],
            ),
            Counterexample::LocalContinuation => (
                [0.3839, 0.4860, 0.1980, 0.0740],
                [0.3365, 0.8109, 0.2136, -0.0225],
            ),
            Counterexample::ContinuationContinuation => (
                [0.0518, 0.2042, 0.0973, 0.0082],
                [0.0513, 0.2007, 0.0953, -0.0408],
            ),
        };
        (
            DMatrix::from_row_slice(2, 2, &g),
            DMatrix::from_row_slice(2, 2, &e),
        )
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Counterexample::LocalLocal => "ll",
            Counterexample::LocalContinuation => "lc",
            Counterexample::ContinuationContinuation => "cc",
        }
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short_name().to_ascii_uppercase())
    }
}

impl FromStr for Counterexample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ll" => Ok(Counterexample::LocalLocal),
            "lc" => Ok(Counterexample::LocalContinuation),
            "cc" => Ok(Counterexample::ContinuationContinuation),
            other => Err(Error::Spec(format!(
                "unknown counterexample '{other}' (expected ll, lc or cc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleRecord {
    pub name: String,
    pub lambda: f64,
    pub pi: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub printed_gamma: Vec<Vec<f64>>,
    pub printed_eta: Vec<Vec<f64>>,
    pub gamma_nonnegative: bool,
    pub eta_has_negative: bool,
}

impl CounterexampleRecord {
    /// Both sign claims hold.
    pub fn holds(&self) -> bool {
        self.gamma_nonnegative && self.eta_has_negative
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Recomputes the interactions and log-odds ratios of a built-in table.
pub fn counterexample_verify(which: Counterexample) -> Result<CounterexampleRecord> {
    let pi = which.table();
    let (l1, l2) = which.pair();
    let fam = DivergenceFamily::cressie_read(which.lambda())?;
    let (gamma, eta) = pair_matrices(&pi, l1, l2, fam)?;
    let (pg, pe) = which.printed();
    Ok(CounterexampleRecord {
        name: which.to_string(),
        lambda: which.lambda(),
        pi: rows(&pi),
        gamma_nonnegative: gamma.iter().all(|&v| v >= -NONNEG_TOL),
        eta_has_negative: eta.iter().any(|&v| v < 0.0),
        gamma: rows(&gamma),
        eta: rows(&eta),
        printed_gamma: rows(&pg),
        printed_eta: rows(&pe),
    })
}
