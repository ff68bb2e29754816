//! Zero-mean Gaussian process with covariance `exp(-|s - t|)` sampled on a
//! grid through a Cholesky factor of the grid covariance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::functional::Grid;

#[derive(Debug, Clone)]
pub struct ExpCovarianceProcess {
    factor: DMatrix<f64>,
}

pub fn exp_covariance(grid: &Grid) -> DMatrix<f64> {
    let t = grid.points();
    DMatrix::from_fn(t.len(), t.len(), |i, j| (-(t[i] - t[j]).abs()).exp())
}

impl ExpCovarianceProcess {
    pub fn new(grid: &Grid) -> Result<Self> {
        let cov = exp_covariance(grid);
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
        Ok(Self { factor: chol.l() })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.factor.nrows();
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.factor * z).iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::rng::rng_from_seed;

    #[test]
    fn pointwise_variance_is_one() {
        let grid = Grid::uniform(0.0, 1.0, 50).unwrap();
        let gp = ExpCovarianceProcess::new(&grid).unwrap();
        let mut rng = rng_from_seed(2024);
        let draws: Vec<Vec<f64>> = (0..2000).map(|_| gp.sample(&mut rng)).collect();
        for idx in [0, 17, 25, 49] {
            let var = draws.iter().map(|d| d[idx] * d[idx]).sum::<f64>() / 2000.0;
            assert!((var - 1.0).abs() < 0.1, "t index {idx}: {var}");
        }
    }
}
