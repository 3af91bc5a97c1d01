//! Workloads shared by the benchmarks.

use rcassoc::{DivergenceFamily, LinearConstraint, LogitType, ModelSpec};

/// The specifications compared in the mobility example, all rank one on
/// global logits at power -0.04.
pub fn mobility_specs() -> Vec<(&'static str, ModelSpec)> {
    let base = ModelSpec::new(
        LogitType::G,
        LogitType::G,
        DivergenceFamily::cressie_read(-0.04).expect("valid power"),
        1,
    );
    vec![
        ("rc", base.clone()),
        (
            "row-effects",
            base.clone().with_constraint(LinearConstraint::RowEffects),
        ),
        (
            "column-effects",
            base.clone()
                .with_constraint(LinearConstraint::ColumnEffects),
        ),
        (
            "marginal-homogeneity",
            base.clone()
                .with_constraint(LinearConstraint::MarginalHomogeneity),
        ),
        (
            "marginal-shift",
            base.with_constraint(LinearConstraint::MarginalShift),
        ),
    ]
}
