use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::divergence::DivergenceFamily;
use crate::error::{Error, Result};
use crate::table::LogitType;

/// Linear restrictions on the marginal logits and interactions that can be
/// added on top of the rank constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearConstraint {
    /// Row and column marginal logits are equal.
    MarginalHomogeneity,
    /// Row and column marginal logits differ by a common constant.
    MarginalShift,
    /// Row-effects model ("R"): column scores equally spaced, so every
    /// interaction in a row is the same, `gamma_ij = gamma_{i,j+1}`.
    RowEffects,
    /// Column-effects model ("C"): row scores equally spaced, so every
    /// interaction in a column is the same, `gamma_ij = gamma_{i+1,j}`.
    ColumnEffects,
    /// `A z = offset`, where `z` stacks the row marginal logits, the column
    /// marginal logits and the row-major interactions.
    Custom {
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
    },
}

impl LinearConstraint {
    pub fn name(&self) -> &'static str {
        match self {
            LinearConstraint::MarginalHomogeneity => "marginal-homogeneity",
            LinearConstraint::MarginalShift => "marginal-shift",
            LinearConstraint::RowEffects => "row-effects",
            LinearConstraint::ColumnEffects => "column-effects",
            LinearConstraint::Custom { .. } => "custom",
        }
    }

    fn is_spacing(&self) -> bool {
        matches!(
            self,
            LinearConstraint::RowEffects | LinearConstraint::ColumnEffects
        )
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinearConstraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "marginal-homogeneity" | "mh" | "m.h." => Ok(LinearConstraint::MarginalHomogeneity),
            "marginal-shift" | "ms" | "m.s." => Ok(LinearConstraint::MarginalShift),
            "row-effects" | "r" | "equal-row-spacing" => Ok(LinearConstraint::RowEffects),
            "column-effects"
            | "col-effects"
            | "c"
            | "equal-col-spacing"
            | "equal-column-spacing" => Ok(LinearConstraint::ColumnEffects),
            other => Err(Error::Spec(format!("unknown constraint '{other}'"))),
        }
    }
}

/// Sign and scale convention for recovered association scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreNormalization {
    /// Marginally weighted mean zero and variance one, last score not below
    /// the first.
    #[default]
    Weighted,
}

/// A model: logit pair, divergence, rank and extra linear constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub rows_logit: LogitType,
    pub cols_logit: LogitType,
    pub family: DivergenceFamily,
    pub rank: usize,
    pub constraints: Vec<LinearConstraint>,
    pub normalization: ScoreNormalization,
}

impl ModelSpec {
    pub fn new(
        rows_logit: LogitType,
        cols_logit: LogitType,
        family: DivergenceFamily,
        rank: usize,
    ) -> Self {
        Self {
            rows_logit,
            cols_logit,
            family,
            rank,
            constraints: Vec::new(),
            normalization: ScoreNormalization::Weighted,
        }
    }

    pub fn with_constraint(mut self, c: LinearConstraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn pair(&self) -> (LogitType, LogitType) {
        (self.rows_logit, self.cols_logit)
    }

    /// Largest admissible rank for an `rows x cols` table.
    pub fn max_rank(rows: usize, cols: usize) -> usize {
        rows.min(cols) - 1
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if rows < 2 || cols < 2 {
            return Err(Error::Dimension(format!(
                "table {rows}x{cols} is too small"
            )));
        }
        if self.rank > Self::max_rank(rows, cols) {
            return Err(Error::Spec(format!(
                "rank {} exceeds min({rows}, {cols}) - 1",
                self.rank
            )));
        }
        if let DivergenceFamily::CressieRead(l) = self.family {
            if (l + 1.0).abs() < 1e-8 || l.abs() < 1e-8 || !l.is_finite() {
                return Err(Error::Spec(format!("inadmissible power {l}")));
            }
        }
        let z_len = (rows - 1) + (cols - 1) + (rows - 1) * (cols - 1);
        for c in &self.constraints {
            match c {
                LinearConstraint::MarginalHomogeneity | LinearConstraint::MarginalShift => {
                    if rows != cols {
                        return Err(Error::Spec(format!("{c} needs a square table")));
                    }
                    if self.rows_logit != self.cols_logit {
                        return Err(Error::Spec(format!(
                            "{c} needs identical row and column logit types"
                        )));
                    }
                }
                LinearConstraint::Custom { matrix, offset }
                    if matrix.ncols() != z_len || matrix.nrows() != offset.len() =>
                {
                    return Err(Error::Dimension(format!(
                        "custom constraint must be k x {z_len} with an offset of length k"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Whether the rank residual is part of the constraint vector. Either
    /// spacing restriction makes the interaction matrix rank one by itself,
    /// so the residual would only add redundant rows.
    pub(crate) fn uses_rank_residual(&self, rows: usize, cols: usize) -> bool {
        let spacing = self.constraints.iter().any(LinearConstraint::is_spacing);
        let saturated = (rows - 1 - self.rank) * (cols - 1 - self.rank) == 0;
        !saturated && !(spacing && self.rank >= 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let s = ModelSpec::new(LogitType::G, LogitType::G, DivergenceFamily::Kl, 1);
        assert!(s.validate(5, 5).is_ok());
        assert!(
            ModelSpec::new(LogitType::G, LogitType::G, DivergenceFamily::Kl, 5)
                .validate(5, 5)
                .is_err()
        );
        let mh = s
            .clone()
            .with_constraint(LinearConstraint::MarginalHomogeneity);
        assert!(mh.validate(4, 5).is_err());
        let mixed = ModelSpec::new(LogitType::G, LogitType::L, DivergenceFamily::Kl, 1)
            .with_constraint(LinearConstraint::MarginalShift);
        assert!(mixed.validate(4, 4).is_err());
        let bad = s.with_constraint(LinearConstraint::Custom {
            matrix: DMatrix::zeros(1, 3),
            offset: DVector::zeros(1),
        });
        assert!(bad.validate(3, 3).is_err());
    }

    #[test]
    fn parse_constraint_names() {
        assert_eq!(
            "ms".parse::<LinearConstraint>().unwrap(),
            LinearConstraint::MarginalShift
        );
        assert_eq!(
            "equal-row-spacing".parse::<LinearConstraint>().unwrap(),
            LinearConstraint::RowEffects
        );
        assert_eq!(
            "C".parse::<LinearConstraint>().unwrap(),
            LinearConstraint::ColumnEffects
        );
        assert!("bogus".parse::<LinearConstraint>().is_err());
    }
}
