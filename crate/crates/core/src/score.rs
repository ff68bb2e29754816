//! Local Outlier Factor scores on a dissimilarity matrix or on embedding
//! coordinates.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dist::DistanceMatrix;
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::functional::{format_f64, LabelVector, LABEL_COLUMN};

/// Lower bound on a reachability-distance sum. Keeps exact duplicates finite.
pub const REACH_SUM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LofConfig {
    pub min_pts: usize,
}

impl LofConfig {
    pub fn new(min_pts: usize) -> Self {
        Self { min_pts }
    }

    /// Uses [`default_min_pts`] for a dataset of `n` observations.
    pub fn default_for(n: usize) -> Result<Self> {
        default_min_pts(n).map(Self::new)
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.min_pts < 2 || self.min_pts + 1 > n {
            return Err(Error::param(format!(
                "minPts = {} outside [2, {}]",
                self.min_pts,
                n.saturating_sub(1)
            )));
        }
        Ok(())
    }
}

/// One score per observation; larger means more outlying.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub method_tag: String,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, method_tag: impl Into<String>) -> Self {
        Self {
            scores,
            method_tag: method_tag.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Two columns `index,score`, plus `label` when labels are given.
    pub fn write_csv<W: Write>(&self, writer: W, labels: Option<&LabelVector>) -> Result<()> {
        if let Some(l) = labels {
            if l.len() != self.len() {
                return Err(Error::LengthMismatch {
                    left: self.len(),
                    right: l.len(),
                });
            }
        }
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        let mut header = vec!["index".to_string(), "score".to_string()];
        if labels.is_some() {
            header.push(LABEL_COLUMN.into());
        }
        w.write_record(&header)?;
        for (i, s) in self.scores.iter().enumerate() {
            let mut rec = vec![i.to_string(), format_f64(*s)];
            if let Some(l) = labels {
                rec.push(if l.flags()[i] { "1" } else { "0" }.into());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// `round(0.75 n)` (half away from zero), clamped to `[2, n - 1]`.
pub fn default_min_pts(n: usize) -> Result<usize> {
    if n < 4 {
        return Err(Error::param(format!("default minPts needs n >= 4, got {n}")));
    }
    let k = (0.75 * n as f64).round() as usize;
    Ok(k.clamp(2, n - 1))
}

/// LOF on an arbitrary dissimilarity matrix. Neighbourhoods include every
/// point tied with the `minPts`-th nearest one.
pub fn lof_from_distances(d: &DistanceMatrix, cfg: LofConfig) -> Result<ScoreVector> {
    let n = d.n();
    cfg.check(n)?;
    let k = cfg.min_pts;

    let neighbourhoods: Vec<(f64, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut others: Vec<f64> = (0..n).filter(|&b| b != a).map(|b| d.get(a, b)).collect();
            others.sort_by(f64::total_cmp);
            let kdist = others[k - 1];
            let members = (0..n)
                .filter(|&b| b != a && d.get(a, b) <= kdist)
                .collect();
            (kdist, members)
        })
        .collect();

    let lrd: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|a| {
            let members = &neighbourhoods[a].1;
            let reach_sum: f64 = members
                .iter()
                .map(|&b| neighbourhoods[b].0.max(d.get(a, b)))
                .sum();
            members.len() as f64 / reach_sum.max(REACH_SUM_FLOOR)
        })
        .collect();

    let scores = (0..n)
        .into_par_iter()
        .map(|a| {
            let members = &neighbourhoods[a].1;
            let mean = members.iter().map(|&b| lrd[b]).sum::<f64>() / members.len() as f64;
            mean / lrd[a]
        })
        .collect();

    Ok(ScoreVector::new(
        scores,
        format!("lof:{}({})", k, d.metric_tag()),
    ))
}

/// LOF on Euclidean distances between rows of `coords`.
pub fn lof_on_coords(coords: &DMatrix<f64>, cfg: LofConfig) -> Result<ScoreVector> {
    lof_from_distances(&DistanceMatrix::euclidean(coords), cfg)
}

pub fn lof_on_embedding(emb: &Embedding, cfg: LofConfig) -> Result<ScoreVector> {
    lof_on_coords(&emb.coords, cfg)
}
