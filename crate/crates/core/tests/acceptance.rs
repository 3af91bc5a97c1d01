//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits with a failure status if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcassoc::analysis::{
    counterexample_verify, pair_matrices, quadrant_dependence, reconstruct, row_below_later_rows,
    score_correlation, stochastic_order, Counterexample, NONNEG_TOL,
};
use rcassoc::estimation::{
    as_step, fit, fit_table, indicator_basis, CanonicalParam, ConstraintSystem, FitOptions,
};
use rcassoc::interactions::{col_logits, gamma_matrix, row_logits};
use rcassoc::rank::rank_residual;
use rcassoc::{data, ContingencyTable, DivergenceFamily, LinearConstraint, LogitType, ModelSpec};

use common::{all_pairs, dirichlet_table, family, nonneg, proposal};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mobility_spec(lambda: f64, pair: LogitType) -> ModelSpec {
    ModelSpec::new(pair, pair, family(lambda), 1)
}

fn final_model() -> rcassoc::FitResult {
    let spec = mobility_spec(-0.04, LogitType::G).with_constraint(LinearConstraint::MarginalShift);
    fit_table(&data::british_mobility(), &spec, &FitOptions::default()).unwrap()
}

fn published_deviances() -> Outcome {
    let table = data::british_mobility();
    let cases = [
        ("none", None, 7.60, 9),
        (
            "equal row spacing (R)",
            Some(LinearConstraint::RowEffects),
            50.15,
            12,
        ),
        (
            "equal column spacing (C)",
            Some(LinearConstraint::ColumnEffects),
            55.88,
            12,
        ),
        (
            "marginal homogeneity",
            Some(LinearConstraint::MarginalHomogeneity),
            40.47,
            13,
        ),
        (
            "marginal shift",
            Some(LinearConstraint::MarginalShift),
            17.19,
            12,
        ),
    ];
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, c, dev, dof) in cases {
        let mut spec = mobility_spec(-0.04, LogitType::G);
        if let Some(c) = c {
            spec = spec.with_constraint(c);
        }
        let r = fit_table(&table, &spec, &FitOptions::default()).unwrap();
        ok &= r.converged && (r.deviance - dev).abs() <= 0.05 && r.dof == dof;
        parts.push(format!("{name}: {:.3}/{}", r.deviance, r.dof));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(5);
    check(ok, format!("{} in {elapsed:.2?}", parts.join(", ")))
}

fn headline_numbers() -> Outcome {
    let r = final_model();
    let sd = r.scores.clone().unwrap();
    let corr = score_correlation(&r.pi_hat, &sd).unwrap();
    let psi = sd.psi[0];
    let ok = (r.p_value - 0.143).abs() <= 0.002
        && (corr - 0.46).abs() <= 0.01
        && (psi - 1.98).abs() <= 0.005;
    check(
        ok,
        format!(
            "p = {:.4}, correlation = {corr:.4}, psi = {psi:.4} (weighted scores)",
            r.p_value
        ),
    )
}

fn cumulative_panel() -> Outcome {
    let r = final_model();
    let printed = data::mobility_fitted_cumulative();
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let row = r.pi_hat.row(i);
        let total = row.sum();
        let mut cum = 0.0;
        for j in 0..4 {
            cum += row[j];
            worst = worst.max((cum / total - printed[(i, j)]).abs());
        }
    }
    check(worst <= 0.005, format!("max abs difference {worst:.5}"))
}

fn sweep_shape() -> Outcome {
    let table = data::british_mobility();
    let grid: Vec<f64> = (0..=50)
        .map(|k| ((-1.0 + 0.04 * k as f64) * 100.0).round() / 100.0)
        .collect();
    let mut curves = Vec::new();
    for pair in [LogitType::L, LogitType::G, LogitType::C] {
        let curve: Vec<Option<f64>> = grid
            .iter()
            .map(|&l| {
                if (l + 1.0).abs() < 1e-9 {
                    return None;
                }
                let r = fit_table(&table, &mobility_spec(l, pair), &FitOptions::default()).unwrap();
                r.converged.then_some(r.deviance)
            })
            .collect();
        curves.push(curve);
    }
    let gg = &curves[1];
    let (imin, dmin) = gg
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.map(|d| (i, d)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let at_min = grid[imin];
    let mut ok = (at_min + 0.04).abs() <= 0.04 + 1e-9;
    // Neighborhood of the minimum: three grid steps on either side.
    for i in imin.saturating_sub(3)..=(imin + 3).min(grid.len() - 1) {
        match (gg[i], curves[0][i], curves[2][i]) {
            (Some(g), Some(l), Some(c)) => ok &= g <= l && g <= c,
            _ => ok = false,
        }
    }
    let failed: usize = curves
        .iter()
        .map(|c| c.iter().skip(1).filter(|d| d.is_none()).count())
        .sum();
    ok &= failed == 0;
    check(
        ok,
        format!("GG minimum {dmin:.3} at lambda = {at_min:.2}; GG below LL and CC within 3 steps; {failed} non-converged cells"),
    )
}

fn counterexamples() -> Outcome {
    let start = Instant::now();
    let records: Vec<_> = Counterexample::ALL
        .iter()
        .map(|&c| counterexample_verify(c).unwrap())
        .collect();
    let elapsed = start.elapsed();
    let ok = records.iter().all(|r| r.holds()) && elapsed < Duration::from_secs(1);
    let parts: Vec<String> = records
        .iter()
        .map(|r| {
            let gmin = r
                .gamma
                .iter()
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let emin = r
                .eta
                .iter()
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min);
            format!(
                "{} (lambda {}): min gamma {gmin:.4}, min eta {emin:.4}",
                r.name, r.lambda
            )
        })
        .collect();
    check(ok, format!("{} in {elapsed:.2?}", parts.join("; ")))
}

fn kl_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let (r, c) = (3 + k % 3, 3 + (k / 3) % 3);
        let t = ContingencyTable::from_probs(dirichlet_table(&mut rng, r, c)).unwrap();
        for (l1, l2) in all_pairs() {
            let (g, e) = pair_matrices(t.pi(), l1, l2, DivergenceFamily::Kl).unwrap();
            worst = worst.max((g - e).amax());
        }
    }
    check(
        worst <= 1e-10,
        format!("max |gamma(KL) - eta| = {worst:.2e} over 1000 tables x 16 pairs"),
    )
}

fn rank_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_zero: f64 = 0.0;
    let mut smallest_nonzero = f64::INFINITY;
    for s in 0..1000 {
        let k = 1 + s % 2;
        let (m, n) = (k + 2 + s % 3, k + 2 + (s / 3) % 3);
        let a = DMatrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0));
        let b = DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
        let mat = &a * &b;
        let scale = mat.amax();
        let (r, _) = rank_residual(&mat, k).unwrap();
        worst_zero = worst_zero.max(r.amax() / scale);
        let x = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let bumped = &mat + &x * y.transpose() * (0.1 * scale);
        let (r, _) = rank_residual(&bumped, k).unwrap();
        smallest_nonzero = smallest_nonzero.min(r.amax() / bumped.amax());
    }
    check(
        worst_zero <= 1e-9 && smallest_nonzero > 1e-6,
        format!(
            "rank-K residual <= {worst_zero:.2e}; rank-(K+1) residual >= {smallest_nonzero:.2e}"
        ),
    )
}

fn jacobian_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let specs = [
        ModelSpec::new(LogitType::G, LogitType::G, family(-0.04), 1)
            .with_constraint(LinearConstraint::MarginalShift),
        ModelSpec::new(LogitType::L, LogitType::L, family(0.0), 1),
        ModelSpec::new(LogitType::C, LogitType::R, family(0.7), 2),
        ModelSpec::new(LogitType::L, LogitType::C, family(-0.5), 1)
            .with_constraint(LinearConstraint::RowEffects),
        ModelSpec::new(LogitType::G, LogitType::G, family(2.0), 1)
            .with_constraint(LinearConstraint::MarginalHomogeneity),
    ];
    let mut worst: f64 = 0.0;
    for point in 0..100 {
        let spec = &specs[point % specs.len()];
        let theta = DVector::from_fn(15, |_, _| rng.random_range(-0.8..0.8));
        let p = CanonicalParam::new(theta.clone(), indicator_basis(16), 4, 4).unwrap();
        let sys = ConstraintSystem::new(spec, 4, 4).unwrap();
        let e = sys.evaluate_with_jacobian(&p).unwrap();
        let step = 1e-6;
        for c in 0..15 {
            let mut tp = theta.clone();
            tp[c] += step;
            let mut tm = theta.clone();
            tm[c] -= step;
            let hp = sys.evaluate(&p.with_theta(tp), e.plan.as_ref()).unwrap();
            let hm = sys.evaluate(&p.with_theta(tm), e.plan.as_ref()).unwrap();
            let fd = (hp - hm) / (2.0 * step);
            let an = e.jacobian.column(c);
            let scale = an.amax().max(1.0);
            worst = worst.max((fd - an).amax() / scale);
        }
    }
    check(
        worst <= 1e-5,
        format!("max relative difference {worst:.2e} at 100 points"),
    )
}

fn uniqueness_round_trip() -> Outcome {
    use LogitType::{C, G, L};
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let pairs = [(L, L), (G, G), (C, C), (L, G), (L, C), (C, G)];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for _ in 0..200 {
        let t = ContingencyTable::from_probs(dirichlet_table(&mut rng, 4, 4)).unwrap();
        for &(l1, l2) in &pairs {
            for lambda in [-0.5, 0.0, 1.0] {
                let fam = family(lambda);
                let rl = row_logits(&t, l1).unwrap();
                let cl = col_logits(&t, l2).unwrap();
                let g = gamma_matrix(&t, l1, l2, fam).unwrap();
                match reconstruct(&rl, &cl, &g, fam) {
                    Ok(rec) => worst = worst.max((rec.pi - t.pi()).amax()),
                    Err(e) => failures.push(format!("{l1}{l2} lambda {lambda}: {e}")),
                }
            }
        }
    }
    check(
        worst <= 1e-7 && failures.is_empty(),
        format!(
            "max entry error {worst:.2e}, {} failures over 200 tables x 6 pairs x 3 powers{}",
            failures.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!(": {}", failures.join("; "))
            }
        ),
    )
}

/// Draws until `target` tables satisfy `premise`, then counts conclusions
/// that fail.
fn implication<P, C>(seed: u64, target: usize, premise: P, conclusion: C) -> (usize, usize, usize)
where
    P: Fn(&DMatrix<f64>, DivergenceFamily) -> bool,
    C: Fn(&DMatrix<f64>, DivergenceFamily) -> bool,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambdas = [-0.5, 0.0, 0.5, 2.0];
    let (mut accepted, mut drawn, mut violations) = (0, 0, 0);
    while accepted < target && drawn < 400 * target {
        let size = (3 + drawn % 3, 3 + (drawn / 3) % 3);
        let fam = family(lambdas[drawn % 4]);
        drawn += 1;
        let pi = proposal(&mut rng, size.0, size.1);
        if !premise(&pi, fam) {
            continue;
        }
        accepted += 1;
        if !conclusion(&pi, fam) {
            violations += 1;
        }
    }
    (accepted, drawn, violations)
}

fn implications() -> Outcome {
    use LogitType::{C, G, L};
    const TARGET: usize = 10_000;
    let gamma_ok =
        |l1, l2| move |pi: &DMatrix<f64>, fam| nonneg(&pair_matrices(pi, l1, l2, fam).unwrap().0);
    let eta_ok = |pi: &DMatrix<f64>, l1, l2| {
        pair_matrices(pi, l1, l2, DivergenceFamily::Kl)
            .unwrap()
            .1
            .iter()
            .all(|&v| v >= -NONNEG_TOL)
    };
    let mut lines = Vec::new();
    let mut ok = true;
    let mut seed = 500;
    let mut record = |name: String, (acc, drawn, viol): (usize, usize, usize)| {
        ok &= acc >= TARGET && viol == 0;
        lines.push(format!("{name}: {viol}/{acc} ({drawn} drawn)"));
    };
    for (l1, l2) in all_pairs().into_iter().filter(|&(a, b)| a == G || b == G) {
        seed += 1;
        let r = implication(seed, TARGET, gamma_ok(l1, l2), |pi, _| eta_ok(pi, l1, l2));
        record(format!("gamma{}{}=>eta", l1.as_char(), l2.as_char()), r);
    }
    let r = implication(601, TARGET, gamma_ok(L, L), |pi, _| {
        eta_ok(pi, L, G) && eta_ok(pi, G, L)
    });
    record("gammaLL=>etaLG,GL".into(), r);
    let r = implication(602, TARGET, gamma_ok(L, C), |pi, _| {
        eta_ok(pi, L, G) && eta_ok(pi, G, G)
    });
    record("gammaLC=>etaLG,GG".into(), r);
    let r = implication(603, TARGET, gamma_ok(C, C), |pi, _| eta_ok(pi, G, G));
    record("gammaCC=>etaGG".into(), r);
    let r = implication(604, TARGET, gamma_ok(C, C), |pi, _| {
        row_below_later_rows(pi)
    });
    record("gammaCC=>s(i,j)<=P(Y>j|X>i)".into(), r);
    let r = implication(605, TARGET, gamma_ok(C, C), |pi, _| quadrant_dependence(pi));
    record("gammaCC=>quadrant".into(), r);
    check(ok, format!("violations/accepted: {}", lines.join(", ")))
}

/// Nonnegative CC interactions do not force the rows into simple stochastic
/// order: this prints the number of accepted tables where the order fails.
fn continuation_row_order() -> Outcome {
    use LogitType::C;
    let r = implication(
        604,
        10_000,
        |pi: &DMatrix<f64>, fam| nonneg(&pair_matrices(pi, C, C, fam).unwrap().0),
        |pi, _| stochastic_order(pi),
    );
    let detail = format!("{}/{} accepted tables violate s(i,j) <= s(i+1,j)", r.2, r.0);
    check(r.0 >= 10_000 && r.2 == 0, detail)
}

fn optimizer_cross_check() -> Outcome {
    // Frozen from an independent maximization of the multinomial likelihood
    // over log pi_ij = a_i + b_j + phi u_i v_j (BFGS, 200 random starts).
    const ORACLE: f64 = 2.5062737967285784;
    let y = DMatrix::from_row_slice(3, 3, &[30.0, 12.0, 5.0, 14.0, 25.0, 11.0, 4.0, 13.0, 28.0]);
    let spec = ModelSpec::new(LogitType::L, LogitType::L, DivergenceFamily::Kl, 1);
    let r = fit(&y, &spec, &FitOptions::default()).unwrap();
    check(
        r.converged && (r.deviance - ORACLE).abs() <= 1e-4,
        format!("deviance {:.6} vs oracle {ORACLE:.6}", r.deviance),
    )
}

fn projected_score() -> Outcome {
    let table = data::british_mobility();
    let y = table.counts().unwrap().clone();
    let yv = DVector::from_iterator(y.len(), y.transpose().iter().copied());
    let n = table.n();
    let mut worst: f64 = 0.0;
    for c in [
        None,
        Some(LinearConstraint::RowEffects),
        Some(LinearConstraint::MarginalShift),
    ] {
        let mut spec = mobility_spec(-0.04, LogitType::G);
        if let Some(c) = c {
            spec = spec.with_constraint(c);
        }
        let r = fit_table(&table, &spec, &FitOptions::default()).unwrap();
        let param = CanonicalParam::from_probs(&r.pi_hat).unwrap();
        let sys = ConstraintSystem::new(&spec, 5, 5).unwrap();
        let step = as_step(&param, &yv, &sys).unwrap();
        worst = worst.max(step.projected_score().amax() / n);
    }
    check(worst <= 1e-6, format!("max |X's| / n = {worst:.2e}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    // Criteria known to be unattainable, with the reason printed on failure.
    let known_false: &[(&str, &str)] = &[(
        "6h",
        "the claimed implication is false; with KL the table with rows (0.0147, 0.0114, 0.0373), \
         (0.0106, 0.0043, 0.0175), (0.0352, 0.0559, 0.8131) has all CC log-odds ratios positive \
         and s(1,1) = 0.768 > s(2,1) = 0.675",
    )];
    let criteria: [Criterion; 13] = [
        ("1 published deviances and dof", published_deviances),
        ("2 p-value, correlation and psi", headline_numbers),
        ("3 fitted cumulative conditional panel", cumulative_panel),
        ("4 lambda sweep shape", sweep_shape),
        ("5 counterexamples", counterexamples),
        ("6a KL equivalence", kl_equivalence),
        ("6b rank lemma", rank_lemma),
        ("6c constraint Jacobian", jacobian_checks),
        ("6d uniqueness round trip", uniqueness_round_trip),
        ("6e implications", implications),
        ("6f optimizer cross-check", optimizer_cross_check),
        ("6g projected score at convergence", projected_score),
        (
            "6h CC interactions imply row stochastic order",
            continuation_row_order,
        ),
    ];
    let mut failed = 0;
    let mut expected = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail} [{elapsed:.2?}]");
                match known_false.iter().find(|(id, _)| name.starts_with(id)) {
                    Some((_, why)) => {
                        expected += 1;
                        println!("     known unattainable: {why}");
                    }
                    None => failed += 1,
                }
            }
        }
    }
    if expected > 0 {
        println!("{expected} criteria failed as documented");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
