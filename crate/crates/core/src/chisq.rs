//! Chi-square tail probabilities and the block constancy test.
#[allow(unused_imports)] // inherent f64 math is only there with std
use num_traits::Float;

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// Regularized lower incomplete gamma `P(a, x)` by its power series.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - libm::lgamma(a)).exp()
}

/// Regularized upper incomplete gamma `Q(a, x)` by modified Lentz continued fraction.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - libm::lgamma(a)).exp() * h
}

/// Upper regularized incomplete gamma function `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Upper-tail chi-square probability `P(χ²_df > x)`.
pub fn chisq_survival(x: f64, df: u32) -> f64 {
    assert!(df > 0, "degrees of freedom must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(0.5 * df as f64, 0.5 * x).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub stat: f64,
    pub df: u32,
    pub pvalue: f64,
}

/// Constancy statistic `Σ ((θ̂_i − θ̂) / sd)²` with `len(locals)` degrees of
/// freedom. Callers drop the trailing short block before calling.
pub fn constancy_chisq(locals: &[f64], global: f64, sd: f64) -> Result<ChiSquareTest> {
    if !(sd.is_finite() && sd > 0.0) {
        return Err(Error::InvalidParameter {
            name: "standard deviation",
            value: sd,
        });
    }
    if locals.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: locals.len(),
        });
    }
    let stat: f64 = locals.iter().map(|x| ((x - global) / sd).powi(2)).sum();
    let df = locals.len() as u32;
    Ok(ChiSquareTest {
        stat,
        df,
        pvalue: chisq_survival(stat, df),
    })
}
