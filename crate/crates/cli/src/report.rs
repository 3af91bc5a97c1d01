use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use rcassoc::analysis::{pair_matrices, row_survival};
use rcassoc::interactions::marginal_logits;
use rcassoc::{
    dependence_report, score_correlation, DependenceReport, FitResult, LogitType, Margin,
};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpecReport {
    pub rows_logit: LogitType,
    pub cols_logit: LogitType,
    pub lambda: f64,
    pub family: String,
    pub rank: usize,
    pub constraints: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitSummary {
    pub deviance: f64,
    pub dof: usize,
    pub p_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub constraint_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScoresReport {
    pub psi: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LogitsReport {
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub spec: SpecReport,
    pub fit: FitSummary,
    pub pi_hat: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub marginal_logits: LogitsReport,
    /// Fitted conditional distribution functions of the column given the row.
    pub row_cumulative: Vec<Vec<f64>>,
    pub scores: Option<ScoresReport>,
    pub correlation: Option<f64>,
    #[serde(skip_deserializing)]
    pub dependence: Option<DependenceReport>,
}

/// Shortest text that parses back to the same double.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn matrix_of(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(CliError::usage("matrix rows have different lengths"));
    }
    Ok(DMatrix::from_row_iterator(
        nr,
        nc,
        rows.iter().flatten().copied(),
    ))
}

impl FitReport {
    pub fn new(r: &FitResult) -> Result<Self, CliError> {
        let spec = &r.spec;
        let (l1, l2) = spec.pair();
        let pi = &r.pi_hat;
        let positive = pi.iter().all(|&v| v > 0.0);
        let eta = if positive {
            rows_of(&pair_matrices(pi, l1, l2, spec.family)?.1)
        } else {
            Vec::new()
        };
        let rm: Vec<f64> = pi.row_iter().map(|r| r.sum()).collect();
        let cm: Vec<f64> = pi.column_iter().map(|c| c.sum()).collect();
        let logits = LogitsReport {
            rows: marginal_logits(&rm, l1, Margin::Row)?
                .values
                .iter()
                .copied()
                .collect(),
            cols: marginal_logits(&cm, l2, Margin::Column)?
                .values
                .iter()
                .copied()
                .collect(),
        };
        let survival = row_survival(pi);
        let cumulative = DMatrix::from_fn(survival.nrows(), survival.ncols(), |i, j| {
            1.0 - survival[(i, j)]
        });
        let scores = r.scores.as_ref().filter(|s| s.rank() > 0);
        let correlation = match scores {
            Some(s) => score_correlation(pi, s).ok(),
            None => None,
        };
        let dependence = if positive {
            Some(dependence_report(pi, spec.family, &[(l1, l2)])?)
        } else {
            None
        };
        Ok(Self {
            spec: SpecReport {
                rows_logit: l1,
                cols_logit: l2,
                lambda: spec.family.lambda(),
                family: spec.family.to_string(),
                rank: spec.rank,
                constraints: spec
                    .constraints
                    .iter()
                    .map(|c| c.name().to_string())
                    .collect(),
            },
            fit: FitSummary {
                deviance: r.deviance,
                dof: r.dof,
                p_value: r.p_value,
                iterations: r.iterations,
                converged: r.converged,
                constraint_norm: r.constraint_norm,
                message: r.message.clone(),
            },
            pi_hat: rows_of(pi),
            gamma: rows_of(&r.gamma_hat),
            eta,
            marginal_logits: logits,
            row_cumulative: rows_of(&cumulative),
            scores: scores.map(|s| ScoresReport {
                psi: s.psi.clone(),
                mu: s.mu.clone(),
                nu: s.nu.clone(),
            }),
            correlation,
            dependence,
        })
    }

    /// Long-format rows `quantity,row,col,value` carrying the same numbers
    /// as the JSON form.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["quantity", "row", "col", "value"])?;
        let mut scalar = |name: &str, v: String| w.write_record([name, "", "", v.as_str()]);
        scalar("deviance", num(self.fit.deviance))?;
        scalar("dof", self.fit.dof.to_string())?;
        scalar("p_value", num(self.fit.p_value))?;
        scalar("iterations", self.fit.iterations.to_string())?;
        scalar("converged", self.fit.converged.to_string())?;
        scalar("constraint_norm", num(self.fit.constraint_norm))?;
        if let Some(c) = self.correlation {
            scalar("correlation", num(c))?;
        }
        let mut matrix = |name: &str, m: &[Vec<f64>]| -> Result<(), CliError> {
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    w.write_record([
                        name.to_string(),
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        num(*v),
                    ])?;
                }
            }
            Ok(())
        };
        matrix("pi_hat", &self.pi_hat)?;
        matrix("gamma", &self.gamma)?;
        matrix("eta", &self.eta)?;
        matrix(
            "row_logit",
            std::slice::from_ref(&self.marginal_logits.rows),
        )?;
        matrix(
            "col_logit",
            std::slice::from_ref(&self.marginal_logits.cols),
        )?;
        if let Some(s) = &self.scores {
            matrix("psi", std::slice::from_ref(&s.psi))?;
            matrix("mu", &s.mu)?;
            matrix("nu", &s.nu)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepRow {
    pub pair: String,
    pub lambda: f64,
    pub deviance: Option<f64>,
    pub dof: Option<usize>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructReport {
    pub pi: Vec<Vec<f64>>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn vector_of(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
