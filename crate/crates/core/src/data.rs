//! Bundled data sets and published reference values.

use nalgebra::DMatrix;

use crate::table::{parse_counts, ContingencyTable};

/// Father-by-son occupational status counts as shipped in
/// `data/british_mobility.csv`.
pub const BRITISH_MOBILITY_CSV: &str = include_str!("../data/british_mobility.csv");

pub fn british_mobility() -> ContingencyTable {
    parse_counts(BRITISH_MOBILITY_CSV).expect("bundled table parses")
}

/// Published cumulative conditional distributions `P(son <= j | father = i)`,
/// `j = 1..4`, under the rank-one global model with a constant marginal
/// shift at power -0.04.
pub fn mobility_fitted_cumulative() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        4,
        &[
            0.3932, 0.7188, 0.7859, 0.9457, //
            0.0560, 0.3852, 0.5670, 0.8906, //
            0.0159, 0.1747, 0.3683, 0.8214, //
            0.0106, 0.0970, 0.2311, 0.7128, //
            0.0058, 0.0516, 0.1314, 0.5298,
        ],
    )
}

/// Published scores of the same model: (row, column) per category.
#[allow(clippy::approx_constant)]
pub const MOBILITY_SCORES: [(f64, f64); 5] = [
    (-2.8343, -2.9825),
    (-1.5076, -1.6513),
    (-0.5235, -0.6150),
    (0.3199, 0.2474),
    (1.0738, 1.0162),
];
