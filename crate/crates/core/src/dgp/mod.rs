//! Seeded synthetic data-generating processes.
//!
//! Every generator returns a labeled [`FunctionalDataset`](crate::functional::FunctionalDataset):
//! `round(r * n)` observations come from the anomalous process (label `true`),
//! the rest from the common process. Outlier positions are shuffled with the
//! same seeded stream, and `meta` records the generator, its configuration
//! and the per-observation kind.

mod beta;
mod generators;
mod gp;
pub mod rng;
mod spline;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use beta::{beta_cdf, beta_pdf, Warp};
pub use generators::{
    beta_shift_curve, draw_template_warp, gen_beta_shift, gen_dgp_mixture, gen_dgp_templates,
    gen_phase_case, gen_sim_model, gen_taxonomy_shape, generate, PhaseCase, SimModel,
};
pub use gp::{exp_covariance, ExpCovarianceProcess};
pub use spline::BSplineBasis;

/// Largest admissible outlier ratio.
pub const MAX_OUTLIER_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DgpName {
    /// Level-shifted `cos(20πt)` curves vs. level-shifted `sin(πt²)` curves.
    TaxonomyShape,
    /// Beta densities vs. vertically shifted Beta densities.
    BetaShift,
    PhaseI,
    PhaseII,
    PhaseIII,
    /// Shift and shape outliers around a linear trend.
    Dgp1,
    /// Shift, isolated and shape outliers around a linear trend.
    Dgp2,
    /// Warped random spline template, 15 basis functions.
    Dgp3,
    /// Warped random spline template, 25 basis functions, mixture warps.
    Dgp4,
    SimShift,
    SimIsolated,
    SimShape,
}

const NAMES: [(DgpName, &str); 12] = [
    (DgpName::TaxonomyShape, "taxonomy-shape"),
    (DgpName::BetaShift, "beta-shift"),
    (DgpName::PhaseI, "phase-1"),
    (DgpName::PhaseII, "phase-2"),
    (DgpName::PhaseIII, "phase-3"),
    (DgpName::Dgp1, "dgp1"),
    (DgpName::Dgp2, "dgp2"),
    (DgpName::Dgp3, "dgp3"),
    (DgpName::Dgp4, "dgp4"),
    (DgpName::SimShift, "sim-shift"),
    (DgpName::SimIsolated, "sim-isolated"),
    (DgpName::SimShape, "sim-shape"),
];

impl DgpName {
    pub fn all() -> impl Iterator<Item = DgpName> {
        NAMES.iter().map(|(n, _)| *n)
    }

    pub fn as_str(&self) -> &'static str {
        NAMES
            .iter()
            .find(|(n, _)| n == self)
            .map(|(_, s)| *s)
            .expect("every name is listed")
    }

    /// Grid size used when none is given.
    pub fn default_grid_size(&self) -> usize {
        match self {
            DgpName::Dgp1
            | DgpName::Dgp2
            | DgpName::SimShift
            | DgpName::SimIsolated
            | DgpName::SimShape => 50,
            _ => 100,
        }
    }

    /// Names of the tunable entries accepted in [`DgpConfig::params`].
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            DgpName::Dgp1
            | DgpName::Dgp2
            | DgpName::SimShift
            | DgpName::SimIsolated
            | DgpName::SimShape => &["shift_sd"],
            _ => &[],
        }
    }

    /// Dimension of the common-process parameter space, when finite.
    pub fn parameter_dimension(&self) -> Option<usize> {
        match self {
            DgpName::TaxonomyShape | DgpName::PhaseII => Some(1),
            DgpName::BetaShift
            | DgpName::PhaseI
            | DgpName::PhaseIII
            | DgpName::Dgp3
            | DgpName::Dgp4 => Some(2),
            // Gaussian-process noise has no finite parametrisation.
            _ => None,
        }
    }
}

impl fmt::Display for DgpName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DgpName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NAMES
            .iter()
            .find(|(_, name)| name.eq_ignore_ascii_case(s.trim()))
            .map(|(n, _)| *n)
            .ok_or_else(|| {
                let known: Vec<&str> = NAMES.iter().map(|(_, s)| *s).collect();
                Error::param(format!("unknown DGP {s:?}; expected one of {}", known.join(", ")))
            })
    }
}

impl TryFrom<String> for DgpName {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DgpName> for String {
    fn from(n: DgpName) -> Self {
        n.as_str().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub name: DgpName,
    pub n: usize,
    /// Outlier ratio in `[0, 0.1]`.
    pub r: f64,
    /// Grid size, at least 10.
    pub m: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl DgpConfig {
    pub fn new(name: DgpName, n: usize, r: f64, seed: u64) -> Self {
        Self {
            name,
            n,
            r,
            m: name.default_grid_size(),
            seed,
            params: BTreeMap::new(),
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.r.is_finite() && (0.0..=MAX_OUTLIER_RATIO).contains(&self.r)) {
            return Err(Error::param(format!(
                "outlier ratio r = {} outside [0, {MAX_OUTLIER_RATIO}]",
                self.r
            )));
        }
        if self.m < 10 {
            return Err(Error::param(format!("grid size m must be at least 10, got {}", self.m)));
        }
        let allowed = self.name.param_names();
        for (key, value) in &self.params {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::param(format!(
                    "parameter {key:?} is not used by {}; accepted: [{}]",
                    self.name,
                    allowed.join(", ")
                )));
            }
            if !value.is_finite() || *value < 0.0 {
                return Err(Error::param(format!("parameter {key} = {value} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// `round(r * n)`, half away from zero.
    pub fn n_outliers(&self) -> usize {
        (self.r * self.n as f64).round() as usize
    }
}
