use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Map, Value};

use super::beta::{beta_pdf, Warp};
use super::gp::ExpCovarianceProcess;
use super::rng::{rng_from_seed, DgpRng, RNG_ALGORITHM};
use super::spline::BSplineBasis;
use super::{DgpConfig, DgpName};
use crate::error::{Error, Result};
use crate::functional::{FunctionalDataset, Grid, LabelVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseCase {
    /// One manifold with random amplitude and phase; nothing is an outlier.
    I,
    /// Fixed-phase curves vs. curves shifted by one unit.
    II,
    /// Two disjoint phase ranges.
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimModel {
    Shift,
    Isolated,
    Shape,
}

impl SimModel {
    fn kind(&self) -> &'static str {
        match self {
            SimModel::Shift => "shift",
            SimModel::Isolated => "isolated",
            SimModel::Shape => "shape",
        }
    }
}

const INLIER: &str = "inlier";

/// Dispatches on `cfg.name`.
pub fn generate(cfg: &DgpConfig) -> Result<FunctionalDataset> {
    match cfg.name {
        DgpName::TaxonomyShape => gen_taxonomy_shape(cfg),
        DgpName::BetaShift => gen_beta_shift(cfg),
        DgpName::PhaseI => gen_phase_case(PhaseCase::I, cfg),
        DgpName::PhaseII => gen_phase_case(PhaseCase::II, cfg),
        DgpName::PhaseIII => gen_phase_case(PhaseCase::III, cfg),
        DgpName::Dgp1 => gen_dgp_mixture(1, cfg),
        DgpName::Dgp2 => gen_dgp_mixture(2, cfg),
        DgpName::Dgp3 => gen_dgp_templates(3, cfg),
        DgpName::Dgp4 => gen_dgp_templates(4, cfg),
        DgpName::SimShift => gen_sim_model(SimModel::Shift, cfg),
        DgpName::SimIsolated => gen_sim_model(SimModel::Isolated, cfg),
        DgpName::SimShape => gen_sim_model(SimModel::Shape, cfg),
    }
}

/// Validates `cfg` as if it named `name`, so the per-family entry points can
/// be called with any config.
fn prepare(cfg: &DgpConfig, name: DgpName) -> Result<DgpConfig> {
    let cfg = DgpConfig {
        name,
        ..cfg.clone()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// `k` outlier flags among `n`, in a seeded random order.
fn shuffled_labels(n: usize, k: usize, rng: &mut DgpRng) -> Vec<bool> {
    let mut flags: Vec<bool> = (0..n).map(|i| i < k).collect();
    flags.shuffle(rng);
    flags
}

fn uniform(rng: &mut DgpRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..=hi)
}

fn normal(rng: &mut DgpRng, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd)
        .expect("standard deviation is finite and nonnegative")
        .sample(rng)
}

fn finish(
    cfg: &DgpConfig,
    grid: Grid,
    rows: Vec<Vec<f64>>,
    flags: Vec<bool>,
    kinds: Vec<&str>,
) -> Result<FunctionalDataset> {
    let mut meta = Map::new();
    meta.insert("dgp".into(), json!(cfg.name.as_str()));
    meta.insert("n".into(), json!(cfg.n));
    meta.insert("m".into(), json!(cfg.m));
    meta.insert("r".into(), json!(cfg.r));
    meta.insert("seed".into(), json!(cfg.seed));
    meta.insert("rng".into(), json!(RNG_ALGORITHM));
    meta.insert("params".into(), json!(cfg.params));
    meta.insert("d2".into(), json!(cfg.name.parameter_dimension()));
    meta.insert(
        "n_outliers".into(),
        json!(flags.iter().filter(|&&f| f).count()),
    );
    meta.insert(
        "kinds".into(),
        Value::Array(kinds.into_iter().map(|k| json!(k)).collect()),
    );
    Ok(FunctionalDataset::new(grid, rows, Some(LabelVector::new(flags)))?.with_meta(meta))
}

/// Inliers `b + 0.05t + cos(20πt)`, `b ~ N(5, 3²)`; outliers
/// `a + 0.05t + sin(πt²)`, `a ~ N(5, 4²)`; `t` in `[0, 1]`.
pub fn gen_taxonomy_shape(cfg: &DgpConfig) -> Result<FunctionalDataset> {
    let cfg = prepare(cfg, DgpName::TaxonomyShape)?;
    let grid = Grid::uniform(0.0, 1.0, cfg.m)?;
    let mut rng = rng_from_seed(cfg.seed);
    let flags = shuffled_labels(cfg.n, cfg.n_outliers(), &mut rng);
    let rows = flags
        .iter()
        .map(|&outlier| {
            if outlier {
                let a = normal(&mut rng, 5.0, 4.0);
                grid.points()
                    .iter()
                    .map(|t| a + 0.05 * t + (PI * t * t).sin())
                    .collect()
            } else {
                let b = normal(&mut rng, 5.0, 3.0);
                grid.points()
                    .iter()
                    .map(|t| b + 0.05 * t + (20.0 * PI * t).cos())
                    .collect()
            }
        })
        .collect();
    let kinds = kinds_from_flags(&flags, "shape");
    finish(&cfg, grid, rows, flags, kinds)
}

fn kinds_from_flags(flags: &[bool], outlier_kind: &'static str) -> Vec<&'static str> {
    flags
        .iter()
        .map(|&f| if f { outlier_kind } else { INLIER })
        .collect()
}

/// `f_Beta(t; θ1, θ2) + θ3` on `grid`.
pub fn beta_shift_curve(grid: &Grid, theta1: f64, theta2: f64, theta3: f64) -> Vec<f64> {
    grid.points()
        .iter()
        .map(|&t| beta_pdf(t, theta1, theta2) + theta3)
        .collect()
}

/// Inliers are Beta(θ1, θ2) densities with `θ1, θ2 ~ U[1, 2]`; outliers add a
/// vertical shift `θ3 ~ U[0, 0.5]`.
pub fn gen_beta_shift(cfg: &DgpConfig) -> Result<FunctionalDataset> {
    let cfg = prepare(cfg, DgpName::BetaShift)?;
    let grid = Grid::uniform(0.0, 1.0, cfg.m)?;
    let mut rng = rng_from_seed(cfg.seed);
    let flags = shuffled_labels(cfg.n, cfg.n_outliers(), &mut rng);
    let rows = flags
        .iter()
        .map(|&outlier| {
            let theta1 = uniform(&mut rng, 1.0, 2.0);
            let theta2 = uniform(&mut rng, 1.0, 2.0);
            let theta3 = if outlier {
                uniform(&mut rng, 0.0, 0.5)
            } else {
                0.0
            };
            beta_shift_curve(&grid, theta1, theta2, theta3)
        })
        .collect();
    let kinds = kinds_from_flags(&flags, "shift");
    finish(&cfg, grid, rows, flags, kinds)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Scaled and translated Gaussian bumps `θ1 φ(t - θ2)` on `[-4, 4]`.
pub fn gen_phase_case(case: PhaseCase, cfg: &DgpConfig) -> Result<FunctionalDataset> {
    let name = match case {
        PhaseCase::I => DgpName::PhaseI,
        PhaseCase::II => DgpName::PhaseII,
        PhaseCase::III => DgpName::PhaseIII,
    };
    let cfg = prepare(cfg, name)?;
    let grid = Grid::uniform(-4.0, 4.0, cfg.m)?;
    let mut rng = rng_from_seed(cfg.seed);
    let k = match case {
        PhaseCase::I => 0,
        _ => cfg.n_outliers(),
    };
    let flags = shuffled_labels(cfg.n, k, &mut rng);
    let rows = flags
        .iter()
        .map(|&outlier| {
            let (amplitude, location) = match case {
                PhaseCase::I => (uniform(&mut rng, 0.1, 2.0), uniform(&mut rng, -2.0, 2.0)),
                PhaseCase::II => {
                    let amplitude = uniform(&mut rng, 0.1, 2.0);
                    (amplitude, if outlier { 0.0 } else { -1.0 })
                }
                PhaseCase::III => {
                    let amplitude = uniform(&mut rng, 0.1, 2.0);
                    let location = if outlier {
                        uniform(&mut rng, -0.5, 0.1)
                    } else {
                        uniform(&mut rng, -1.3, -0.7)
                    };
                    (amplitude, location)
                }
            };
            grid.points()
                .iter()
                .map(|&t| amplitude * std_normal_pdf(t - location))
                .collect()
        })
        .collect();
    let kinds = kinds_from_flags(&flags, "phase");
    finish(&cfg, grid, rows, flags, kinds)
}

/// Draws the warping function of one observation of DGP 3 or 4.
pub fn draw_template_warp(variant: u8, outlier: bool, rng: &mut DgpRng) -> Result<Warp> {
    let pair = |rng: &mut DgpRng, lo: f64, hi: f64| (uniform(rng, lo, hi), uniform(rng, lo, hi));
    let warp = match (variant, outlier) {
        (3, false) => {
            let (a, b) = pair(rng, 4.0, 6.0);
            Warp::Beta { a, b }
        }
        (3, true) => {
            let (a, b) = pair(rng, 3.0, 4.0);
            Warp::Beta { a, b }
        }
        (4, false) => {
            let (a, b) = pair(rng, 3.0, 8.0);
            Warp::Beta { a, b }
        }
        (4, true) => Warp::BetaMixture {
            first: pair(rng, 3.0, 8.0),
            second: pair(rng, 0.1, 3.0),
        },
        _ => return Err(Error::param(format!("template DGP variant must be 3 or 4, got {variant}"))),
    };
    Ok(warp)
}

/// A random cubic spline template `g` per dataset; every observation is
/// `g(w_i(t)) + ε` with a Beta-CDF warp `w_i` and white noise `ε`.
pub fn gen_dgp_templates(variant: u8, cfg: &DgpConfig) -> Result<FunctionalDataset> {
    let (name, n_basis, sigma) = match variant {
        3 => (DgpName::Dgp3, 15, 0.1),
        4 => (DgpName::Dgp4, 25, 0.15),
        _ => return Err(Error::param(format!("template DGP variant must be 3 or 4, got {variant}"))),
    };
    let cfg = prepare(cfg, name)?;
    let grid = Grid::uniform(0.0, 1.0, cfg.m)?;
    let basis = BSplineBasis::clamped_uniform(n_basis, 3)?;
    let mut rng = rng_from_seed(cfg.seed);
    let coefs: Vec<f64> = (0..n_basis).map(|_| normal(&mut rng, 0.0, 1.0)).collect();
    let flags = shuffled_labels(cfg.n, cfg.n_outliers(), &mut rng);
    let mut rows = Vec::with_capacity(cfg.n);
    for &outlier in &flags {
        let warp = draw_template_warp(variant, outlier, &mut rng)?;
        let row = grid
            .points()
            .iter()
            .map(|&t| basis.combine(&coefs, warp.apply(t)) + normal(&mut rng, 0.0, sigma))
            .collect();
        rows.push(row);
    }
    let kinds = kinds_from_flags(&flags, "warp");
    let mut ds = finish(&cfg, grid, rows, flags, kinds)?;
    ds.meta.insert("template_coefficients".into(), json!(coefs));
    Ok(ds)
}

struct SimSampler {
    grid: Grid,
    noise: ExpCovarianceProcess,
    shift_sd: f64,
}

impl SimSampler {
    fn new(cfg: &DgpConfig) -> Result<Self> {
        let grid = Grid::uniform(0.0, 1.0, cfg.m)?;
        let noise = ExpCovarianceProcess::new(&grid)?;
        Ok(Self {
            grid,
            noise,
            shift_sd: cfg.param("shift_sd", 0.0),
        })
    }

    /// One curve of the given kind (`None` = inlier).
    fn draw(&self, kind: Option<SimModel>, rng: &mut DgpRng) -> Vec<f64> {
        let e = self.noise.sample(rng);
        let level = if self.shift_sd > 0.0 {
            normal(rng, 0.0, self.shift_sd)
        } else {
            0.0
        };
        let t = self.grid.points();
        let base = t.iter().zip(&e).map(|(t, e)| 4.0 * t + level + e);
        match kind {
            None => base.collect(),
            Some(SimModel::Shift) => {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                base.map(|v| v + 8.0 * sign).collect()
            }
            Some(SimModel::Isolated) => {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let start = uniform(rng, 0.0, 0.96);
                base.zip(t)
                    .map(|(v, &t)| {
                        if (start..=start + 0.04).contains(&t) {
                            v + 6.0 * sign
                        } else {
                            v
                        }
                    })
                    .collect()
            }
            Some(SimModel::Shape) => {
                let phase = uniform(rng, 0.0, 2.0 * PI);
                base.zip(t)
                    .map(|(v, &t)| v + 2.0 * (4.0 * PI * t + phase).sin())
                    .collect()
            }
        }
    }
}

/// Inliers `4t + e(t)` with `e` a zero-mean process with covariance
/// `exp(-|s - t|)`. Outliers add a `±8` level shift, a `±6` spike on a
/// random interval of length 0.04, or `2 sin(4πt + u)`. The optional
/// `shift_sd` parameter adds an `N(0, shift_sd²)` level to every curve.
pub fn gen_sim_model(model: SimModel, cfg: &DgpConfig) -> Result<FunctionalDataset> {
    let name = match model {
        SimModel::Shift => DgpName::SimShift,
        SimModel::Isolated => DgpName::SimIsolated,
        SimModel::Shape => DgpName::SimShape,
    };
    let cfg = prepare(cfg, name)?;
    let sampler = SimSampler::new(&cfg)?;
    let mut rng = rng_from_seed(cfg.seed);
    let flags = shuffled_labels(cfg.n, cfg.n_outliers(), &mut rng);
    let rows = flags
        .iter()
        .map(|&f| sampler.draw(f.then_some(model), &mut rng))
        .collect();
    let kinds = kinds_from_flags(&flags, model.kind());
    finish(&cfg, sampler.grid.clone(), rows, flags, kinds)
}

/// Linear-trend inliers with mixed outliers: variant 1 splits outliers evenly
/// between shift and shape forms, variant 2 draws each outlier's form
/// uniformly from shift, isolated and shape.
pub fn gen_dgp_mixture(variant: u8, cfg: &DgpConfig) -> Result<FunctionalDataset> {
    let name = match variant {
        1 => DgpName::Dgp1,
        2 => DgpName::Dgp2,
        _ => return Err(Error::param(format!("mixture DGP variant must be 1 or 2, got {variant}"))),
    };
    let cfg = prepare(cfg, name)?;
    let sampler = SimSampler::new(&cfg)?;
    let mut rng = rng_from_seed(cfg.seed);
    let k = cfg.n_outliers();
    let flags = shuffled_labels(cfg.n, k, &mut rng);
    let outlier_kinds: Vec<SimModel> = if variant == 1 {
        let mut kinds: Vec<SimModel> = (0..k)
            .map(|i| if i < k - k / 2 { SimModel::Shift } else { SimModel::Shape })
            .collect();
        kinds.shuffle(&mut rng);
        kinds
    } else {
        let all = [SimModel::Shift, SimModel::Isolated, SimModel::Shape];
        (0..k).map(|_| all[rng.random_range(0..3)]).collect()
    };
    let mut next_kind = outlier_kinds.into_iter();
    let mut rows = Vec::with_capacity(cfg.n);
    let mut kinds = Vec::with_capacity(cfg.n);
    for &outlier in &flags {
        let kind = if outlier { next_kind.next() } else { None };
        kinds.push(kind.map_or(INLIER, |m| m.kind()));
        rows.push(sampler.draw(kind, &mut rng));
    }
    finish(&cfg, sampler.grid.clone(), rows, flags, kinds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(ds: &FunctionalDataset) -> Vec<String> {
        ds.meta["kinds"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect()
    }

    #[test]
    fn taxonomy_counts() {
        let ds = gen_taxonomy_shape(&DgpConfig::new(DgpName::TaxonomyShape, 54, 0.09, 3)).unwrap();
        assert_eq!(ds.labels().unwrap().n_outliers(), 5);
        assert_eq!(ds.n(), 54);
        let none = gen_taxonomy_shape(&DgpConfig::new(DgpName::TaxonomyShape, 54, 0.0, 3)).unwrap();
        assert_eq!(none.labels().unwrap().n_outliers(), 0);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        for name in DgpName::all() {
            let cfg = DgpConfig::new(name, 40, 0.1, 77);
            let a = generate(&cfg).unwrap();
            let b = generate(&cfg).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn beta_shift_boundary_lies_on_common_manifold() {
        let grid = Grid::uniform(0.0, 1.0, 50).unwrap();
        let common: Vec<f64> = grid.points().iter().map(|&t| beta_pdf(t, 1.3, 1.8)).collect();
        assert_eq!(beta_shift_curve(&grid, 1.3, 1.8, 0.0), common);
        let ds = gen_beta_shift(&DgpConfig::new(DgpName::BetaShift, 100, 0.1, 5)).unwrap();
        assert_eq!(ds.labels().unwrap().n_outliers(), 10);
    }

    #[test]
    fn beta_inliers_have_unit_mass() {
        let ds = gen_beta_shift(&DgpConfig::new(DgpName::BetaShift, 60, 0.1, 8)).unwrap();
        for (row, &outlier) in ds.values().iter().zip(ds.labels().unwrap().flags()) {
            let mass = ds.grid().integrate(row);
            if !outlier {
                assert!((mass - 1.0).abs() < 0.02, "{mass}");
            } else {
                assert!((1.0 - 0.02..=1.5 + 0.02).contains(&mass));
            }
        }
    }

    #[test]
    fn phase_case_counts_and_peaks() {
        let one = gen_phase_case(PhaseCase::I, &DgpConfig::new(DgpName::PhaseI, 100, 0.1, 1)).unwrap();
        assert_eq!(one.labels().unwrap().n_outliers(), 0);

        let two = gen_phase_case(PhaseCase::II, &DgpConfig::new(DgpName::PhaseII, 100, 0.05, 1)).unwrap();
        assert_eq!(two.labels().unwrap().n_outliers(), 5);

        let three = gen_phase_case(PhaseCase::III, &DgpConfig::new(DgpName::PhaseIII, 100, 0.1, 1)).unwrap();
        let h = 8.0 / 99.0;
        for (row, &outlier) in three.values().iter().zip(three.labels().unwrap().flags()) {
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let peak = three.grid().points()[argmax];
            let (lo, hi) = if outlier { (-0.5, 0.1) } else { (-1.3, -0.7) };
            assert!(peak >= lo - h && peak <= hi + h, "outlier={outlier} peak={peak}");
        }
    }

    #[test]
    fn template_seeds_change_template() {
        let a = gen_dgp_templates(3, &DgpConfig::new(DgpName::Dgp3, 20, 0.1, 1)).unwrap();
        let b = gen_dgp_templates(3, &DgpConfig::new(DgpName::Dgp3, 20, 0.1, 2)).unwrap();
        assert_ne!(a.meta["template_coefficients"], b.meta["template_coefficients"]);
        let diff = a.values()[0]
            .iter()
            .zip(&b.values()[0])
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff > 0.0);
        assert!(gen_dgp_templates(5, &DgpConfig::new(DgpName::Dgp3, 20, 0.1, 1)).is_err());
    }

    #[test]
    fn shift_outliers_sit_eight_away() {
        let cfg = DgpConfig::new(DgpName::SimShift, 100, 0.1, 0);
        let sampler = SimSampler::new(&cfg).unwrap();
        let m = cfg.m;
        let mut inlier = vec![0.0; m];
        let mut up = (vec![0.0; m], 0.0);
        let mut down = (vec![0.0; m], 0.0);
        for seed in 0..200 {
            let mut rng = rng_from_seed(seed);
            for (a, v) in inlier.iter_mut().zip(sampler.draw(None, &mut rng)) {
                *a += v / 200.0;
            }
            let x = sampler.draw(Some(SimModel::Shift), &mut rng);
            let level: f64 = x.iter().zip(sampler.grid.points()).map(|(v, t)| v - 4.0 * t).sum::<f64>();
            let acc = if level > 0.0 { &mut up } else { &mut down };
            acc.1 += 1.0;
            for (a, v) in acc.0.iter_mut().zip(&x) {
                *a += v;
            }
        }
        for j in 0..m {
            assert!((up.0[j] / up.1 - inlier[j] - 8.0).abs() < 0.5, "t index {j}");
            assert!((down.0[j] / down.1 - inlier[j] + 8.0).abs() < 0.5, "t index {j}");
        }
    }

    #[test]
    fn isolated_spike_support_is_short() {
        let cfg = DgpConfig::new(DgpName::SimIsolated, 200, 0.1, 9);
        let sampler = SimSampler::new(&cfg).unwrap();
        let mut rng = rng_from_seed(4);
        for _ in 0..50 {
            // Replaying the stream separates the noiseless part from the spike.
            let mut probe = rng.clone();
            let outlier = sampler.draw(Some(SimModel::Isolated), &mut rng);
            let e = sampler.noise.sample(&mut probe);
            let differs = outlier
                .iter()
                .zip(sampler.grid.points())
                .zip(&e)
                .filter(|((v, t), e)| (*v - 4.0 * *t - *e).abs() > 1e-9)
                .count();
            assert!(differs >= 1);
            assert!(differs as f64 <= 0.05 * cfg.m as f64, "{differs}");
        }
    }

    #[test]
    fn mixture_kinds_are_recorded() {
        let ds = gen_dgp_mixture(2, &DgpConfig::new(DgpName::Dgp2, 100, 0.1, 12)).unwrap();
        let k = kinds(&ds);
        let flags = ds.labels().unwrap().flags();
        assert_eq!(flags.iter().filter(|&&f| f).count(), 10);
        for (kind, &f) in k.iter().zip(flags) {
            assert_eq!(kind == INLIER, !f);
        }
        let one = gen_dgp_mixture(1, &DgpConfig::new(DgpName::Dgp1, 100, 0.1, 12)).unwrap();
        let k1 = kinds(&one);
        assert_eq!(k1.iter().filter(|k| *k == "shift").count(), 5);
        assert_eq!(k1.iter().filter(|k| *k == "shape").count(), 5);
        let big = gen_dgp_mixture(2, &DgpConfig::new(DgpName::Dgp2, 1000, 0.01, 12)).unwrap();
        assert_eq!(big.labels().unwrap().n_outliers(), 10);
        assert!(gen_dgp_mixture(3, &DgpConfig::new(DgpName::Dgp2, 100, 0.1, 12)).is_err());
    }

    #[test]
    fn outliers_are_not_appended_at_the_end() {
        let ds = gen_sim_model(SimModel::Shift, &DgpConfig::new(DgpName::SimShift, 100, 0.1, 21)).unwrap();
        let flags = ds.labels().unwrap().flags();
        assert!(flags[..90].iter().any(|&f| f));
    }
}
