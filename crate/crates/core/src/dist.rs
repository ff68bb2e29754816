//! Functional dissimilarities and pairwise distance matrices.
//!
//! All integrals use the trapezoidal rule on the dataset grid, so results are
//! exact for piecewise-linear curves and non-uniform grids are supported.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{format_f64, FunctionalDataset, Grid};

const SYMMETRY_TOL: f64 = 1e-12;

/// Which dissimilarity to compute between two curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricSpec {
    /// `(∫ |x - y|^p dt)^(1/p)`; `p < 1` gives a quasi-metric.
    Lp { p: f64 },
    /// Area between the running integrals of the two curves.
    Wasserstein1,
    /// Dynamic time warping with an optional Sakoe-Chiba band half-width.
    Dtw { window: Option<usize> },
}

impl MetricSpec {
    pub fn lp(p: f64) -> Self {
        MetricSpec::Lp { p }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match *self {
            MetricSpec::Lp { p } if !(p.is_finite() && p > 0.0) => {
                Err(Error::param(format!("Lp exponent must be finite and > 0, got {p}")))
            }
            MetricSpec::Dtw { window: Some(w) } if m > 0 && w > m - 1 => Err(Error::param(
                format!("DTW window {w} outside [0, {}]", m - 1),
            )),
            _ => Ok(()),
        }
    }

    /// Distance between two curves on `grid`.
    pub fn distance(&self, x: &[f64], y: &[f64], grid: &Grid) -> Result<f64> {
        match *self {
            MetricSpec::Lp { p } => lp_distance(x, y, grid, p),
            MetricSpec::Wasserstein1 => wasserstein1_distance(x, y, grid),
            MetricSpec::Dtw { window } => dtw_distance(x, y, window),
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Lp { p } => write!(f, "lp:{p}"),
            MetricSpec::Wasserstein1 => write!(f, "wasserstein1"),
            MetricSpec::Dtw { window: None } => write!(f, "dtw"),
            MetricSpec::Dtw { window: Some(w) } => write!(f, "dtw:{w}"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    /// Accepts `lp:<p>`, `wasserstein1`, `dtw` and `dtw:<window>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let spec = match (kind.to_ascii_lowercase().as_str(), arg) {
            ("lp", Some(p)) => {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::param(format!("bad Lp exponent {p:?}")))?;
                MetricSpec::Lp { p }
            }
            ("wasserstein1" | "wasserstein", None) => MetricSpec::Wasserstein1,
            ("dtw", None) => MetricSpec::Dtw { window: None },
            ("dtw", Some(w)) => MetricSpec::Dtw {
                window: Some(
                    w.parse()
                        .map_err(|_| Error::param(format!("bad DTW window {w:?}")))?,
                ),
            },
            _ => return Err(Error::param(format!("unknown metric {s:?}"))),
        };
        spec.validate(usize::MAX)?;
        Ok(spec)
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

/// Trapezoidal `L_p` distance on `grid`.
pub fn lp_distance(x: &[f64], y: &[f64], grid: &Grid, p: f64) -> Result<f64> {
    check_lengths(x, y)?;
    check_lengths(x, grid.points())?;
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::param(format!("Lp exponent must be finite and > 0, got {p}")));
    }
    // Factor out the largest difference so large p cannot overflow.
    let scale = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let pow: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| ((a - b).abs() / scale).powf(p))
        .collect();
    Ok(scale * grid.integrate(&pow).powf(1.0 / p))
}

/// `∫ |F_x(t) - F_y(t)| dt` with `F` the running trapezoidal integral.
/// Inputs are not required to be densities.
pub fn wasserstein1_distance(x: &[f64], y: &[f64], grid: &Grid) -> Result<f64> {
    check_lengths(x, y)?;
    check_lengths(x, grid.points())?;
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let gap: Vec<f64> = grid
        .cumulative_integral(&diff)
        .into_iter()
        .map(f64::abs)
        .collect();
    Ok(grid.integrate(&gap))
}

/// Dynamic time warping with squared pointwise cost; returns the square root
/// of the optimal accumulated cost. With `window = Some(w)` only cells with
/// `|i - j| <= w` are reachable.
pub fn dtw_distance(x: &[f64], y: &[f64], window: Option<usize>) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Empty("DTW input series is empty".into()));
    }
    let (n, m) = (x.len(), y.len());
    let w = match window {
        Some(w) => {
            if n.abs_diff(m) > w {
                return Err(Error::param(format!(
                    "DTW band {w} cannot connect series of lengths {n} and {m}"
                )));
            }
            w
        }
        None => n.max(m),
    };

    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        curr.fill(f64::INFINITY);
        let lo = i.saturating_sub(w).max(1);
        let hi = (i + w).min(m);
        for j in lo..=hi {
            let d = x[i - 1] - y[j - 1];
            let best = prev[j].min(curr[j - 1]).min(prev[j - 1]);
            curr[j] = d * d + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m].sqrt())
}

/// Symmetric, zero-diagonal, nonnegative dissimilarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d: DMatrix<f64>,
    metric_tag: String,
}

impl DistanceMatrix {
    pub fn new(d: DMatrix<f64>, metric_tag: impl Into<String>) -> Result<Self> {
        let n = d.nrows();
        if n != d.ncols() {
            return Err(Error::InvalidDistanceMatrix(format!(
                "not square: {}x{}",
                n,
                d.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidDistanceMatrix("empty".into()));
        }
        for i in 0..n {
            if d[(i, i)] != 0.0 {
                return Err(Error::InvalidDistanceMatrix(format!(
                    "nonzero diagonal at {i}: {}",
                    d[(i, i)]
                )));
            }
            for j in 0..n {
                let v = d[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "entry ({i}, {j}) = {v}"
                    )));
                }
                if j > i && (v - d[(j, i)]).abs() > SYMMETRY_TOL * (1.0 + v.abs()) {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "asymmetric at ({i}, {j}): {v} vs {}",
                        d[(j, i)]
                    )));
                }
            }
        }
        Ok(Self {
            d,
            metric_tag: metric_tag.into(),
        })
    }

    /// Euclidean distances between the rows of `coords`.
    pub fn euclidean(coords: &DMatrix<f64>) -> Self {
        let n = coords.nrows();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = (coords.row(i) - coords.row(j)).norm();
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        Self {
            d,
            metric_tag: "euclidean".into(),
        }
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn metric_tag(&self) -> &str {
        &self.metric_tag
    }

    /// Same matrix multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::param(format!("scale must be finite and > 0, got {c}")));
        }
        Ok(Self {
            d: &self.d * c,
            metric_tag: self.metric_tag.clone(),
        })
    }

    /// `n` rows by `n` columns, no header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for i in 0..self.n() {
            w.write_record(self.d.row(i).iter().map(|v| format_f64(*v)))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let table = crate::functional::read_csv(reader, false, None)?;
        let n = table.n();
        if table.m() != n {
            return Err(Error::InvalidDistanceMatrix(format!(
                "not square: {n}x{}",
                table.m()
            )));
        }
        let d = DMatrix::from_fn(n, n, |i, j| table.row(i)[j]);
        Self::new(d, "csv")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }
}

/// All pairwise distances between the curves of `ds`. Only the upper
/// triangle is evaluated (in parallel) and mirrored.
pub fn pairwise(ds: &FunctionalDataset, spec: MetricSpec) -> Result<DistanceMatrix> {
    let n = ds.n();
    if n < 2 {
        return Err(Error::param(format!(
            "pairwise distances need at least 2 observations, got {n}"
        )));
    }
    spec.validate(ds.m())?;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            spec.distance(ds.row(i), ds.row(j), ds.grid())
                .map_err(|e| Error::Pair {
                    i,
                    j,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut d = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        if !v.is_finite() {
            return Err(Error::Pair {
                i,
                j,
                source: Box::new(Error::Numerical(format!("non-finite distance {v}"))),
            });
        }
        d[(i, j)] = v;
        d[(j, i)] = v;
    }
    Ok(DistanceMatrix {
        d,
        metric_tag: spec.to_string(),
    })
}
