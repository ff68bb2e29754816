//! Beta densities and CDF-based warping functions.

use statrs::function::beta::{beta_reg, ln_beta};

/// Beta(a, b) density at `t`; zero outside `[0, 1]`.
pub fn beta_pdf(t: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    let log_norm = ln_beta(a, b);
    let edge = |shape: f64| match shape.partial_cmp(&1.0) {
        Some(std::cmp::Ordering::Less) => f64::INFINITY,
        Some(std::cmp::Ordering::Equal) => 1.0,
        _ => 0.0,
    };
    if t == 0.0 {
        return edge(a) * (-log_norm).exp();
    }
    if t == 1.0 {
        return edge(b) * (-log_norm).exp();
    }
    ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - log_norm).exp()
}

/// Beta(a, b) CDF, via the regularised incomplete beta function.
pub fn beta_cdf(t: f64, a: f64, b: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        beta_reg(a, b, t)
    }
}

/// A monotone warp of `[0, 1]` onto itself.
#[derive(Debug, Clone, PartialEq)]
pub enum Warp {
    Beta { a: f64, b: f64 },
    /// Equal-weight mixture of two Beta CDFs.
    BetaMixture { first: (f64, f64), second: (f64, f64) },
}

impl Warp {
    pub fn apply(&self, t: f64) -> f64 {
        match *self {
            Warp::Beta { a, b } => beta_cdf(t, a, b),
            Warp::BetaMixture { first, second } => {
                0.5 * beta_cdf(t, first.0, first.1) + 0.5 * beta_cdf(t, second.0, second.1)
            }
        }
    }
}
