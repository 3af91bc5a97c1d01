use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use rcassoc::analysis::{
    implication_violations, reconstruct as reconstruct_table, CounterexampleRecord,
};
use rcassoc::interactions::Scale;
use rcassoc::{
    counterexample_verify, dependence_report, fit_table, Counterexample, DivergenceFamily,
    FitOptions, InteractionMatrix, LogitType, Margin, MarginalLogits, ModelSpec,
};

use crate::args::{CheckArgs, CounterexampleArgs, FitArgs, Format, ReconstructArgs, SweepArgs};
use crate::input::{
    parse_constraints, parse_grid, parse_pairs, parse_size, read_counts, read_matrix, read_vector,
};
use crate::report::{matrix_of, num, rows_of, vector_of, FitReport, ReconstructReport, SweepRow};
use crate::{CliError, EXIT_CLAIM_FAILED, EXIT_NO_CONVERGENCE};

fn family(lambda: f64) -> Result<DivergenceFamily, CliError> {
    Ok(DivergenceFamily::cressie_read(lambda)?)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn fit(a: &FitArgs) -> Result<u8, CliError> {
    let table = read_counts(&a.input)?;
    let mut spec = ModelSpec::new(
        a.model.rows_logit,
        a.model.cols_logit,
        family(a.lambda)?,
        a.model.rank,
    );
    spec.constraints = parse_constraints(&a.model.constraints)?;
    let result = fit_table(&table, &spec, &FitOptions::default())?;
    let report = FitReport::new(&result)?;
    match a.format {
        Format::Json => print_json(&report)?,
        Format::Csv => report.write_csv(std::io::stdout().lock())?,
    }
    if result.converged {
        Ok(0)
    } else {
        eprintln!(
            "warning: {}",
            result.message.as_deref().unwrap_or("fit did not converge")
        );
        Ok(EXIT_NO_CONVERGENCE)
    }
}

pub fn sweep(a: &SweepArgs) -> Result<u8, CliError> {
    let table = read_counts(&a.input)?;
    let pairs = parse_pairs(&a.pairs)?;
    if pairs.is_empty() {
        return Err(CliError::usage("no logit pairs given"));
    }
    let grid = match (&a.lambda_grid, a.lambda) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(l)) => vec![l],
        (None, None) => parse_grid("-1:1:0.04")?,
    };
    let constraints = parse_constraints(&a.constraints)?;
    let cells: Vec<(LogitType, LogitType, f64)> = pairs
        .iter()
        .flat_map(|&(l1, l2)| grid.iter().map(move |&l| (l1, l2, l)))
        .collect();
    let run = || -> Vec<SweepRow> {
        cells
            .par_iter()
            .map(|&(l1, l2, lambda)| {
                let pair = format!("{}{}", l1.as_char(), l2.as_char());
                let fitted = DivergenceFamily::cressie_read(lambda).and_then(|fam| {
                    let mut spec = ModelSpec::new(l1, l2, fam, a.rank);
                    spec.constraints = constraints.clone();
                    fit_table(&table, &spec, &FitOptions::default())
                });
                match fitted {
                    Ok(r) => SweepRow {
                        pair,
                        lambda,
                        deviance: Some(r.deviance),
                        dof: Some(r.dof),
                        converged: r.converged,
                    },
                    Err(_) => SweepRow {
                        pair,
                        lambda,
                        deviance: None,
                        dof: None,
                        converged: false,
                    },
                }
            })
            .collect()
    };
    let rows = match a.jobs {
        Some(0) => return Err(CliError::usage("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(e.to_string()))?
            .install(run),
        None => run(),
    };
    match a.format {
        Format::Json => print_json(&rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    let failed = rows.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} fits did not converge", rows.len());
    }
    Ok(0)
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<u8, CliError> {
    let from_fit: Option<FitReport> = match &a.from_fit {
        Some(p) => Some(serde_json::from_str(&crate::input::read_text(p)?)?),
        None => None,
    };
    let need = |what: &str| {
        CliError::usage(format!(
            "missing {what}: pass it explicitly or use --from-fit"
        ))
    };
    let rows_logit = a
        .rows_logit
        .or(from_fit.as_ref().map(|f| f.spec.rows_logit))
        .ok_or_else(|| need("--rows-logit"))?;
    let cols_logit = a
        .cols_logit
        .or(from_fit.as_ref().map(|f| f.spec.cols_logit))
        .ok_or_else(|| need("--cols-logit"))?;
    let lambda = a
        .lambda
        .or(from_fit.as_ref().map(|f| f.spec.lambda))
        .ok_or_else(|| need("--lambda"))?;
    let fam = family(lambda)?;
    let row_values = match (&a.row_logits, &from_fit) {
        (Some(p), _) => read_vector(p)?,
        (None, Some(f)) => f.marginal_logits.rows.clone(),
        (None, None) => return Err(need("--row-logits")),
    };
    let col_values = match (&a.col_logits, &from_fit) {
        (Some(p), _) => read_vector(p)?,
        (None, Some(f)) => f.marginal_logits.cols.clone(),
        (None, None) => return Err(need("--col-logits")),
    };
    let gamma = match (&a.gamma, &from_fit) {
        (Some(p), _) => matrix_of(&read_matrix(p)?)?,
        (None, Some(f)) => matrix_of(&f.gamma)?,
        (None, None) => return Err(need("--gamma")),
    };
    if row_values.is_empty() || col_values.is_empty() {
        return Err(CliError::usage("marginal logits must not be empty"));
    }
    let rows = MarginalLogits {
        values: vector_of(&row_values),
        logit_type: rows_logit,
        margin: Margin::Row,
    };
    let cols = MarginalLogits {
        values: vector_of(&col_values),
        logit_type: cols_logit,
        margin: Margin::Column,
    };
    let target = InteractionMatrix {
        values: gamma,
        pair: (rows_logit, cols_logit),
        scale: Scale::Divergence(fam),
    };
    let rec = reconstruct_table(&rows, &cols, &target, fam)?;
    let report = ReconstructReport {
        pi: rows_of(&rec.pi),
        residual: rec.residual,
        iterations: rec.iterations,
    };
    match a.format {
        Format::Json => print_json(&report)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            for row in &report.pi {
                w.write_record(row.iter().map(|&v| num(v)))?;
            }
            w.flush()?;
        }
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct RandomCheck {
    tables: usize,
    rows: usize,
    cols: usize,
    lambda: f64,
    seed: u64,
    tables_with_violations: usize,
    examples: Vec<String>,
}

fn dirichlet(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let w = DMatrix::from_fn(rows, cols, |_, _| {
        let e: f64 = Exp1.sample(rng);
        e.max(1e-12)
    });
    &w / w.sum()
}

pub fn check(a: &CheckArgs) -> Result<u8, CliError> {
    let fam = family(a.lambda)?;
    if let Some(n) = a.random {
        let (rows, cols) = parse_size(&a.size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let mut bad = 0;
        let mut examples = Vec::new();
        for _ in 0..n {
            let pi = dirichlet(&mut rng, rows, cols);
            let v = implication_violations(&pi, fam)?;
            if !v.is_empty() {
                bad += 1;
                if examples.len() < 5 {
                    examples.extend(v);
                }
            }
        }
        print_json(&RandomCheck {
            tables: n,
            rows,
            cols,
            lambda: fam.lambda(),
            seed: a.seed,
            tables_with_violations: bad,
            examples,
        })?;
        return Ok(if bad == 0 { 0 } else { EXIT_CLAIM_FAILED });
    }
    let path = a
        .input
        .as_ref()
        .ok_or_else(|| CliError::usage("an input table or --random is required"))?;
    let table = read_counts(path)?;
    if !table.is_strictly_positive() {
        return Err(CliError::usage(
            "the dependence report needs a table without zero cells",
        ));
    }
    let pairs = match &a.pairs {
        Some(p) => parse_pairs(p)?,
        None => LogitType::all_pairs().collect(),
    };
    let report = dependence_report(table.pi(), fam, &pairs)?;
    print_json(&report)?;
    Ok(if report.violations.is_empty() {
        0
    } else {
        EXIT_CLAIM_FAILED
    })
}

fn format_matrix(m: &[Vec<f64>]) -> Vec<String> {
    m.iter()
        .map(|r| {
            r.iter()
                .map(|v| format!("{v:>8.4}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn print_record(r: &CounterexampleRecord) {
    let status = if r.holds() { "PASS" } else { "FAIL" };
    println!(
        "{status} {} (lambda = {}): gamma all >= 0: {}, eta has a negative entry: {}",
        r.name, r.lambda, r.gamma_nonnegative, r.eta_has_negative
    );
    let blocks = [
        ("gamma (recomputed)", format_matrix(&r.gamma)),
        ("gamma (printed)", format_matrix(&r.printed_gamma)),
        ("eta (recomputed)", format_matrix(&r.eta)),
        ("eta (printed)", format_matrix(&r.printed_eta)),
    ];
    for pair in blocks.chunks(2) {
        println!("    {:<20}{:<20}", pair[0].0, pair[1].0);
        for (a, b) in pair[0].1.iter().zip(&pair[1].1) {
            println!("    {a:<20}{b:<20}");
        }
    }
}

pub fn counterexamples(a: &CounterexampleArgs) -> Result<u8, CliError> {
    let selected: Vec<Counterexample> = if a.only.is_empty() {
        Counterexample::ALL.to_vec()
    } else {
        a.only
            .iter()
            .map(|s| s.parse::<Counterexample>().map_err(CliError::from))
            .collect::<Result<_, _>>()?
    };
    let records = selected
        .iter()
        .map(|&c| counterexample_verify(c))
        .collect::<rcassoc::Result<Vec<_>>>()?;
    if a.json {
        print_json(&records)?;
    } else {
        for r in &records {
            print_record(r);
        }
    }
    Ok(if records.iter().all(CounterexampleRecord::holds) {
        0
    } else {
        EXIT_CLAIM_FAILED
    })
}
