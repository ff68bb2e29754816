//! Clamped uniform B-spline basis evaluated with the Cox-de Boor recursion.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BSplineBasis {
    knots: Vec<f64>,
    degree: usize,
    n_basis: usize,
}

impl BSplineBasis {
    /// `n_basis` functions of the given degree on `[0, 1]`, with the boundary
    /// knots repeated `degree + 1` times and equidistant interior knots.
    pub fn clamped_uniform(n_basis: usize, degree: usize) -> Result<Self> {
        if n_basis < degree + 1 {
            return Err(Error::param(format!(
                "{n_basis} basis functions are too few for degree {degree}"
            )));
        }
        let interior = n_basis - degree - 1;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..=interior).map(|j| j as f64 / (interior + 1) as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Ok(Self {
            knots,
            degree,
            n_basis,
        })
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Values of all basis functions at `t` (clamped into `[0, 1]`).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let u = &self.knots;
        let t = t.clamp(u[0], u[u.len() - 1]);
        let last_span = (0..u.len() - 1)
            .rev()
            .find(|&i| u[i] < u[i + 1])
            .expect("knot vector has a nonempty span");

        // Degree-0 indicators; the last nonempty span is closed on the right.
        let mut n: Vec<f64> = (0..u.len() - 1)
            .map(|i| {
                let inside = (u[i] <= t && t < u[i + 1]) || (i == last_span && t == u[i + 1]);
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();

        for p in 1..=self.degree {
            let next: Vec<f64> = (0..u.len() - 1 - p)
                .map(|i| {
                    let left = if u[i + p] > u[i] {
                        (t - u[i]) / (u[i + p] - u[i]) * n[i]
                    } else {
                        0.0
                    };
                    let right = if u[i + p + 1] > u[i + 1] {
                        (u[i + p + 1] - t) / (u[i + p + 1] - u[i + 1]) * n[i + 1]
                    } else {
                        0.0
                    };
                    left + right
                })
                .collect();
            n = next;
        }
        debug_assert_eq!(n.len(), self.n_basis);
        n
    }

    /// `Σ_k coefs[k] B_k(t)`.
    pub fn combine(&self, coefs: &[f64], t: f64) -> f64 {
        self.eval(t).iter().zip(coefs).map(|(b, c)| b * c).sum()
    }
}
