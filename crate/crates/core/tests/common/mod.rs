#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use rcassoc::{DivergenceFamily, LogitType};

/// Uniform draw from the simplex of `rows x cols` tables.
pub fn dirichlet_table<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let w = DMatrix::from_fn(rows, cols, |_, _| {
        let e: f64 = Exp1.sample(rng);
        e.max(1e-12)
    });
    &w / w.sum()
}

/// Positively associated table: random margins, increasing scores, a
/// positive association parameter and multiplicative noise.
pub fn associated_table<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut u: Vec<f64> = (0..rows).map(|_| rng.random::<f64>()).collect();
    let mut v: Vec<f64> = (0..cols).map(|_| rng.random::<f64>()).collect();
    u.sort_by(f64::total_cmp);
    v.sort_by(f64::total_cmp);
    let a: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    let phi = rng.random_range(0.0..6.0);
    let sigma = rng.random_range(0.0..0.4);
    let w = DMatrix::from_fn(rows, cols, |i, j| {
        let e: f64 = StandardNormal.sample(rng);
        (a[i] + b[j] + phi * u[i] * v[j] + sigma * e).exp()
    });
    &w / w.sum()
}

/// Half uniform, half positively associated proposals.
pub fn proposal<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    if rng.random::<bool>() {
        dirichlet_table(rng, rows, cols)
    } else {
        associated_table(rng, rows, cols)
    }
}

pub fn family(lambda: f64) -> DivergenceFamily {
    if lambda == 0.0 {
        DivergenceFamily::Kl
    } else {
        DivergenceFamily::cressie_read(lambda).unwrap()
    }
}

pub fn all_pairs() -> Vec<(LogitType, LogitType)> {
    LogitType::all_pairs().collect()
}

pub fn nonneg(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&v| v >= 0.0)
}
