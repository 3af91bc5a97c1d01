//! Step length by cubic interpolation.
//!
//! The merit function `f(t)` is evaluated at `t = 0, 1/4, 1/2`; together with
//! `f'(0)` these determine a cubic whose maximizer on `(0, 1]` is the
//! proposed step. If that proposal does not improve on `f(0)`, the step is
//! halved starting from `t = 1`.

/// Outcome of a line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearchOutcome {
    /// Accepted step with `f(t) > f(0)`.
    Step { t: f64, value: f64 },
    /// No step increases `f` (or the direction is null).
    Stalled,
}

/// Smallest step tried by the halving fallback.
pub const MIN_STEP: f64 = 1.0 / (1u64 << 30) as f64;

/// Maximizer on `(0, 1]` of the cubic through `f(0)`, `f'(0)`, `f(1/4)` and
/// `f(1/2)`.
pub fn cubic_maximizer(f0: f64, slope0: f64, f_quarter: f64, f_half: f64) -> f64 {
    let r1 = f_quarter - f0 - slope0 / 4.0;
    let r2 = f_half - f0 - slope0 / 2.0;
    let a = 32.0 * r1 - 4.0 * r2;
    let b = 16.0 * r2 - 64.0 * r1;
    let cubic = |t: f64| f0 + slope0 * t + a * t * t + b * t * t * t;

    let mut candidates = vec![1.0];
    // Roots of slope0 + 2 a t + 3 b t^2 with negative curvature.
    if b.abs() > 1e-14 * (a.abs() + slope0.abs()).max(1e-300) {
        let disc = a * a - 3.0 * b * slope0;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-a + sq) / (3.0 * b), (-a - sq) / (3.0 * b)] {
                if 2.0 * a + 6.0 * b * t < 0.0 {
                    candidates.push(t);
                }
            }
        }
    } else if a < 0.0 {
        candidates.push(-slope0 / (2.0 * a));
    }
    candidates
        .into_iter()
        .filter(|t| t.is_finite())
        .map(|t| t.clamp(f64::MIN_POSITIVE, 1.0))
        .max_by(|&x, &y| cubic(x).total_cmp(&cubic(y)))
        .unwrap_or(1.0)
}

/// Searches along a direction. `eval(t)` returns `None` where `f` cannot be
/// evaluated (for instance when the inverse link leaves its domain), which
/// counts as minus infinity.
pub fn line_search<E>(f0: f64, slope0: f64, direction_norm: f64, mut eval: E) -> LineSearchOutcome
where
    E: FnMut(f64) -> Option<f64>,
{
    if direction_norm == 0.0 || !f0.is_finite() {
        return LineSearchOutcome::Stalled;
    }
    let mut value = |t: f64| eval(t).filter(|v| v.is_finite());
    let f_quarter = value(0.25);
    let f_half = value(0.5);
    if let (Some(fq), Some(fh)) = (f_quarter, f_half) {
        let t = cubic_maximizer(f0, slope0, fq, fh);
        if let Some(ft) = value(t) {
            if ft > f0 {
                // Keep the best of the trial points already evaluated.
                let best = [(t, ft), (0.5, fh), (0.25, fq)]
                    .into_iter()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                return LineSearchOutcome::Step {
                    t: best.0,
                    value: best.1,
                };
            }
        }
    }
    let mut t = 1.0;
    while t >= MIN_STEP {
        let ft = if t == 0.5 {
            f_half
        } else if t == 0.25 {
            f_quarter
        } else {
            value(t)
        };
        if let Some(ft) = ft {
            if ft > f0 {
                return LineSearchOutcome::Step { t, value: ft };
            }
        }
        t *= 0.5;
    }
    LineSearchOutcome::Stalled
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reproduces_an_exact_cubic() {
        // f'(t) = 3 (t - 0.3)(t - 2): local maximum at 0.3.
        let f = |t: f64| t * t * t - 3.45 * t * t + 1.8 * t;
        let t = cubic_maximizer(f(0.0), 1.8, f(0.25), f(0.5));
        assert_relative_eq!(t, 0.3, epsilon = 1e-9);
        // A concave quadratic is a degenerate cubic.
        let f = |t: f64| 1.0 + 0.27 * t - 0.45 * t * t;
        let t = cubic_maximizer(f(0.0), 0.27, f(0.25), f(0.5));
        assert_relative_eq!(t, 0.3, epsilon = 1e-9);
    }

    #[test]
    fn clips_to_unit_step() {
        let f = |t: f64| -(t - 1.5) * (t - 1.5);
        let t = cubic_maximizer(f(0.0), 3.0, f(0.25), f(0.5));
        assert_eq!(t, 1.0);
        match line_search(f(0.0), 3.0, 1.0, |t| Some(f(t))) {
            LineSearchOutcome::Step { t, .. } => assert_eq!(t, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn null_direction_stalls() {
        assert_eq!(
            line_search(0.0, 0.0, 0.0, |_| Some(1.0)),
            LineSearchOutcome::Stalled
        );
    }

    #[test]
    fn invalid_trials_shrink_the_step() {
        // f is only defined below t = 0.1 and increases there.
        let out = line_search(0.0, 1.0, 1.0, |t| if t < 0.1 { Some(t) } else { None });
        match out {
            LineSearchOutcome::Step { t, value } => {
                assert!(t < 0.1);
                assert!(value > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }
}
