//! Phi-divergences: the Kullback-Leibler member and the Cressie-Read power
//! family, together with the derivative `F = phi'` and its inverse `G`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Powers with magnitude below this are treated as the KL limit.
pub const KL_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DivergenceFamily {
    Kl,
    CressieRead(f64),
}

impl DivergenceFamily {
    /// Cressie-Read family with power `lambda`. Values within
    /// [`KL_THRESHOLD`] of zero normalize to [`DivergenceFamily::Kl`];
    /// `lambda = -1` is not a member of the family.
    pub fn cressie_read(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Spec(format!("lambda must be finite, got {lambda}")));
        }
        if lambda.abs() < KL_THRESHOLD {
            return Ok(DivergenceFamily::Kl);
        }
        if (lambda + 1.0).abs() < KL_THRESHOLD {
            return Err(Error::Spec(
                "lambda = -1 is excluded from the power family".into(),
            ));
        }
        Ok(DivergenceFamily::CressieRead(lambda))
    }

    /// The power parameter, 0 for KL.
    pub fn lambda(&self) -> f64 {
        match *self {
            DivergenceFamily::Kl => 0.0,
            DivergenceFamily::CressieRead(l) => l,
        }
    }

    /// `phi(x)`, with `phi(1) = phi'(1) = 0`.
    pub fn phi(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(format!("phi is defined for x >= 0, got {x}")));
        }
        Ok(match *self {
            DivergenceFamily::Kl => {
                if x == 0.0 {
                    1.0
                } else {
                    x * x.ln() - x + 1.0
                }
            }
            DivergenceFamily::CressieRead(l) => {
                (x.powf(l + 1.0) - x - l * (x - 1.0)) / (l * (l + 1.0))
            }
        })
    }

    /// `F(u) = phi'(u)`: `log u` for KL and `(u^lambda - 1) / lambda`
    /// otherwise, so that `F(1) = 0` for every member.
    pub fn f_link(&self, u: f64) -> Result<f64> {
        if u <= 0.0 || u.is_nan() {
            return Err(Error::Domain(format!("F is defined for u > 0, got {u}")));
        }
        Ok(self.f_unchecked(u))
    }

    #[inline]
    pub(crate) fn f_unchecked(&self, u: f64) -> f64 {
        match *self {
            DivergenceFamily::Kl => u.ln(),
            DivergenceFamily::CressieRead(l) => (l * u.ln()).exp_m1() / l,
        }
    }

    /// `u * F'(u)`, which equals `u^lambda` (1 for KL). Used by the chain
    /// rule through ratios.
    #[inline]
    pub(crate) fn u_f_prime(&self, u: f64) -> f64 {
        match *self {
            DivergenceFamily::Kl => 1.0,
            DivergenceFamily::CressieRead(l) => u.powf(l),
        }
    }

    /// `G = F^{-1}`. Under Cressie-Read the argument must satisfy
    /// `lambda * y + 1 > 0`; violations return [`Error::LinkDomain`].
    pub fn g_link(&self, y: f64) -> Result<f64> {
        match *self {
            DivergenceFamily::Kl => Ok(y.exp()),
            DivergenceFamily::CressieRead(l) => {
                let base = l * y;
                if base <= -1.0 || base.is_nan() {
                    return Err(Error::LinkDomain { arg: y, lambda: l });
                }
                Ok((base.ln_1p() / l).exp())
            }
        }
    }

    /// `sum_v p0_v phi(p_v / p0_v)`.
    pub fn divergence(&self, p: &[f64], p0: &[f64]) -> Result<f64> {
        if p.len() != p0.len() {
            return Err(Error::Dimension(format!(
                "distributions have lengths {} and {}",
                p.len(),
                p0.len()
            )));
        }
        p.iter().zip(p0).try_fold(0.0, |acc, (&pv, &qv)| {
            if qv <= 0.0 {
                return Err(Error::Domain(
                    "reference distribution has a zero cell".into(),
                ));
            }
            Ok(acc + qv * self.phi(pv / qv)?)
        })
    }
}

impl fmt::Display for DivergenceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceFamily::Kl => write!(f, "KL"),
            DivergenceFamily::CressieRead(l) => write!(f, "CR({l})"),
        }
    }
}

/// Free-function form of [`DivergenceFamily::divergence`].
pub fn phi_divergence(p: &[f64], p0: &[f64], fam: DivergenceFamily) -> Result<f64> {
    fam.divergence(p, p0)
}
