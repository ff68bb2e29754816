//! Replicated benchmark runner with AUC and Spearman diagnostics.
//!
//! A benchmark crosses DGP templates, outlier ratios and replications. Each
//! `(dgp, r, replication)` cell draws one dataset from its own seed
//! substream and runs every method on it, so results do not depend on
//! execution order or thread count.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::rng::substream_seed;
use crate::dgp::{generate, DgpConfig, DgpName};
use crate::dist::{pairwise, DistanceMatrix, MetricSpec};
use crate::embed::{classical_mds, isomap};
use crate::error::{Error, Result};
use crate::functional::{format_f64, FunctionalDataset, LabelVector};
use crate::score::{lof_from_distances, lof_on_embedding, LofConfig, ScoreVector};

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Midrank Mann-Whitney AUC: `P(s+ > s-) + P(s+ = s-) / 2`.
pub fn auc_values(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::param(
            "AUC needs at least one positive and one negative label",
        ));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::param(format!("score {s} is not comparable")));
    }
    let ranks = average_ranks(scores);
    let pos_rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(r, _)| r)
        .sum();
    let (p, q) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

pub fn auc(scores: &ScoreVector, labels: &LabelVector) -> Result<f64> {
    auc_values(&scores.scores, labels.flags())
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 3 {
        return Err(Error::param(format!(
            "Spearman correlation needs at least 3 values, got {}",
            a.len()
        )));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::param("Spearman correlation of a constant input"));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Linear-interpolation quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbours {
    Fixed(usize),
    /// `n - 1`: the complete graph.
    All,
}

/// How scores are computed from the distance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// LOF directly on the functional distance matrix.
    Raw,
    /// LOF on classical MDS coordinates.
    Mds { dim: Option<usize> },
    /// LOF on ISOMAP coordinates.
    Isomap { k: Neighbours, dim: Option<usize> },
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pipeline::Raw => write!(f, "raw"),
            Pipeline::Mds { dim: None } => write!(f, "mds"),
            Pipeline::Mds { dim: Some(d) } => write!(f, "mds:{d}"),
            Pipeline::Isomap { k, dim } => {
                match k {
                    Neighbours::Fixed(k) => write!(f, "isomap:{k}")?,
                    Neighbours::All => write!(f, "isomap:full")?,
                }
                if let Some(d) = dim {
                    write!(f, ":{d}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    /// `raw`, `mds`, `mds:<dim>`, `isomap:<k>`, `isomap:<k>:<dim>`, with `k`
    /// either a count or `full`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str, what: &str| -> Result<usize> {
            p.parse::<usize>()
                .map_err(|_| Error::param(format!("bad {what} {p:?} in pipeline {s:?}")))
        };
        let pipeline = match parts.as_slice() {
            ["raw"] => Pipeline::Raw,
            ["mds"] => Pipeline::Mds { dim: None },
            ["mds", d] => Pipeline::Mds {
                dim: Some(num(d, "dimension")?),
            },
            ["isomap", k, rest @ ..] if rest.len() <= 1 => {
                let k = if k.eq_ignore_ascii_case("full") {
                    Neighbours::All
                } else {
                    Neighbours::Fixed(num(k, "neighbour count")?)
                };
                let dim = rest.first().map(|d| num(d, "dimension")).transpose()?;
                Pipeline::Isomap { k, dim }
            }
            _ => return Err(Error::param(format!("unknown pipeline {s:?}"))),
        };
        match pipeline {
            Pipeline::Mds { dim: Some(0) } | Pipeline::Isomap { dim: Some(0), .. } => {
                Err(Error::param("embedding dimension must be at least 1"))
            }
            Pipeline::Isomap {
                k: Neighbours::Fixed(0),
                ..
            } => Err(Error::param("ISOMAP needs at least one neighbour")),
            p => Ok(p),
        }
    }
}

mod as_string {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

fn default_true() -> bool {
    true
}

fn default_replications() -> usize {
    500
}

fn default_embed_dim() -> usize {
    5
}

/// One scoring pipeline: metric, optional derivative preprocessing,
/// embedding and LOF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(with = "as_string")]
    pub metric: MetricSpec,
    #[serde(with = "as_string")]
    pub pipeline: Pipeline,
    #[serde(default)]
    pub deriv: bool,
    /// Defaults to `round(0.75 n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_pts: Option<usize>,
}

impl MethodSpec {
    pub fn new(metric: MetricSpec, pipeline: Pipeline) -> Self {
        Self {
            name: None,
            metric,
            pipeline,
            deriv: false,
            min_pts: None,
        }
    }

    pub fn with_deriv(mut self, deriv: bool) -> Self {
        self.deriv = deriv;
        self
    }

    pub fn label(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        let mut s = format!("{}/{}", self.pipeline, self.metric);
        if self.deriv {
            s.push_str("/deriv");
        }
        if let Some(k) = self.min_pts {
            s.push_str(&format!("/minpts{k}"));
        }
        s
    }

    /// Scores `ds` with this method; `dist` is the precomputed distance
    /// matrix of the (possibly differentiated) data under `self.metric`.
    pub fn score(&self, dist: &DistanceMatrix, embed_dim: usize) -> Result<ScoreVector> {
        let n = dist.n();
        let cfg = match self.min_pts {
            Some(k) => LofConfig::new(k),
            None => LofConfig::default_for(n)?,
        };
        match self.pipeline {
            Pipeline::Raw => lof_from_distances(dist, cfg),
            Pipeline::Mds { dim } => {
                let emb = classical_mds(dist, dim.unwrap_or(embed_dim))?;
                lof_on_embedding(&emb, cfg)
            }
            Pipeline::Isomap { k, dim } => {
                let k = match k {
                    Neighbours::Fixed(k) => k,
                    Neighbours::All => n.saturating_sub(1),
                };
                let emb = isomap(dist, k, dim.unwrap_or(embed_dim))?;
                lof_on_embedding(&emb, cfg)
            }
        }
        .map(|mut s| {
            s.method_tag = self.label();
            s
        })
    }

    /// Transforms the data as this method requires, then computes distances.
    pub fn distances(&self, ds: &FunctionalDataset) -> Result<DistanceMatrix> {
        if self.deriv {
            pairwise(&ds.to_derivative()?, self.metric)
        } else {
            pairwise(ds, self.metric)
        }
    }
}

/// DGP settings shared by all replications; `r` and `seed` are filled in
/// per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpTemplate {
    pub name: DgpName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default)]
    pub params: std::collections::BTreeMap<String, f64>,
    /// Draw 1000 observations when `r = 0.01`.
    #[serde(default = "default_true")]
    pub large_n_at_one_percent: bool,
}

impl DgpTemplate {
    pub fn new(name: DgpName, n: usize) -> Self {
        Self {
            name,
            label: None,
            n,
            m: None,
            params: Default::default(),
            large_n_at_one_percent: true,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        if self.params.is_empty() {
            return self.name.to_string();
        }
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}[{}]", self.name, params.join(","))
    }

    pub fn config(&self, r: f64, seed: u64) -> DgpConfig {
        let n = if self.large_n_at_one_percent && (r - 0.01).abs() < 1e-12 {
            1000
        } else {
            self.n
        };
        DgpConfig {
            name: self.name,
            n,
            r,
            m: self.m.unwrap_or_else(|| self.name.default_grid_size()),
            seed,
            params: self.params.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub dgps: Vec<DgpTemplate>,
    pub methods: Vec<MethodSpec>,
    pub r_values: Vec<f64>,
    /// Replications per `(dgp, r)` cell.
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::param("replications must be at least 1"));
        }
        if self.dgps.is_empty() {
            return Err(Error::param("benchmark needs at least one DGP"));
        }
        if self.methods.is_empty() {
            return Err(Error::param("benchmark needs at least one method"));
        }
        if self.r_values.is_empty() {
            return Err(Error::param("benchmark needs at least one outlier ratio"));
        }
        if self.embed_dim == 0 {
            return Err(Error::param("embed_dim must be at least 1"));
        }
        for t in &self.dgps {
            for &r in &self.r_values {
                if r <= 0.0 {
                    return Err(Error::param(format!("outlier ratio {r} must be positive")));
                }
                t.config(r, 0).validate()?;
            }
        }
        for m in &self.methods {
            m.metric.validate(usize::MAX)?;
        }
        Ok(())
    }

    /// Seed of replication `b` of `(dgp, r)`.
    pub fn cell_seed(&self, dgp: usize, r: usize, b: usize) -> u64 {
        let s = substream_seed(self.base_seed, dgp as u64);
        let s = substream_seed(s, r as u64);
        substream_seed(s, b as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRecord {
    pub dgp: String,
    pub method: String,
    pub r: f64,
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub auc: Option<f64>,
    /// Spearman correlation with the raw-distance LOF scores of the same
    /// metric, when such a method is in the benchmark.
    pub spearman_vs_raw: Option<f64>,
    pub error: Option<String>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dgp: String,
    pub method: String,
    pub r: f64,
    pub count: usize,
    pub errors: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub mean: Option<f64>,
    pub median_spearman_vs_raw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub records: Vec<AucRecord>,
    pub summary: Vec<SummaryRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

impl BenchmarkResult {
    /// Per `(dgp, method, r)` statistics over successful records, in the
    /// order the groups first appear.
    pub fn summarize(records: &[AucRecord]) -> Vec<SummaryRow> {
        let mut order: Vec<(String, String, u64)> = Vec::new();
        let mut groups: HashMap<(String, String, u64), Vec<&AucRecord>> = HashMap::new();
        for rec in records {
            let key = (rec.dgp.clone(), rec.method.clone(), rec.r.to_bits());
            if !groups.contains_key(&key) {
                order.push(key.clone());
            }
            groups.entry(key).or_default().push(rec);
        }
        order
            .into_iter()
            .map(|key| {
                let recs = &groups[&key];
                let mut aucs: Vec<f64> = recs.iter().filter_map(|r| r.auc).collect();
                aucs.sort_by(f64::total_cmp);
                let mut rhos: Vec<f64> = recs.iter().filter_map(|r| r.spearman_vs_raw).collect();
                rhos.sort_by(f64::total_cmp);
                let stat = |v: &[f64], q: f64| (!v.is_empty()).then(|| quantile_sorted(v, q));
                SummaryRow {
                    dgp: key.0,
                    method: key.1,
                    r: f64::from_bits(key.2),
                    count: recs.len(),
                    errors: recs.iter().filter(|r| r.error.is_some()).count(),
                    median: stat(&aucs, 0.5),
                    q1: stat(&aucs, 0.25),
                    q3: stat(&aucs, 0.75),
                    mean: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
                    median_spearman_vs_raw: stat(&rhos, 0.5),
                }
            })
            .collect()
    }

    pub fn summary_for(&self, dgp: &str, method: &str, r: f64) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.dgp == dgp && s.method == method && s.r == r)
    }

    /// One row per record: `dgp,method,r,n,replication,seed,auc,spearman_vs_raw,error`.
    /// Wall times are excluded so the file is reproducible.
    pub fn write_records_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "dgp",
            "method",
            "r",
            "n",
            "replication",
            "seed",
            "auc",
            "spearman_vs_raw",
            "error",
        ])?;
        for rec in &self.records {
            w.write_record([
                rec.dgp.clone(),
                rec.method.clone(),
                format_f64(rec.r),
                rec.n.to_string(),
                rec.replication.to_string(),
                rec.seed.to_string(),
                opt(rec.auc),
                opt(rec.spearman_vs_raw),
                rec.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// `dgp,method,r,replication,wall_time_ms`.
    pub fn write_timings_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dgp", "method", "r", "replication", "wall_time_ms"])?;
        for rec in &self.records {
            w.write_record([
                rec.dgp.clone(),
                rec.method.clone(),
                format_f64(rec.r),
                rec.replication.to_string(),
                format!("{:.3}", rec.wall_time_ms),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

struct MethodOutcome {
    scores: Result<ScoreVector>,
    wall_time_ms: f64,
}

/// Runs every method on one dataset, sharing distance matrices between
/// methods with the same metric and preprocessing.
fn run_cell(cfg: &BenchmarkConfig, ds: &FunctionalDataset) -> Vec<MethodOutcome> {
    let mut cache: HashMap<(String, bool), Result<DistanceMatrix>> = HashMap::new();
    cfg.methods
        .iter()
        .map(|m| {
            let start = Instant::now();
            let key = (m.metric.to_string(), m.deriv);
            let dist = cache.entry(key).or_insert_with(|| m.distances(ds));
            let scores = match dist {
                Ok(d) => m.score(d, cfg.embed_dim),
                Err(e) => Err(Error::Numerical(format!("distance computation failed: {e}"))),
            };
            MethodOutcome {
                scores,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        })
        .collect()
}

/// Index of the raw-distance method that `idx` is compared against.
fn raw_partner(methods: &[MethodSpec], idx: usize) -> Option<usize> {
    let m = &methods[idx];
    if m.pipeline == Pipeline::Raw {
        return None;
    }
    methods.iter().position(|o| {
        o.pipeline == Pipeline::Raw
            && o.metric == m.metric
            && o.deriv == m.deriv
            && o.min_pts == m.min_pts
    })
}

/// Runs the full benchmark on `jobs` threads (rayon's default when `None`).
/// Records are ordered by DGP, method, ratio and replication.
pub fn run_benchmark(cfg: &BenchmarkConfig, jobs: Option<usize>) -> Result<BenchmarkResult> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start thread pool: {e}")))?;

    let cells: Vec<(usize, usize, usize)> = (0..cfg.dgps.len())
        .flat_map(|d| {
            (0..cfg.r_values.len()).flat_map(move |r| (0..cfg.replications).map(move |b| (d, r, b)))
        })
        .collect();

    let per_cell: Vec<Vec<AucRecord>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(d, ri, b)| {
                let template = &cfg.dgps[d];
                let r = cfg.r_values[ri];
                let seed = cfg.cell_seed(d, ri, b);
                let dgp_cfg = template.config(r, seed);
                let record = |method: &MethodSpec| AucRecord {
                    dgp: template.label(),
                    method: method.label(),
                    r,
                    n: dgp_cfg.n,
                    replication: b,
                    seed,
                    auc: None,
                    spearman_vs_raw: None,
                    error: None,
                    wall_time_ms: 0.0,
                };
                let ds = match generate(&dgp_cfg) {
                    Ok(ds) => ds,
                    Err(e) => {
                        return cfg
                            .methods
                            .iter()
                            .map(|m| AucRecord {
                                error: Some(format!("generate: {e}")),
                                ..record(m)
                            })
                            .collect();
                    }
                };
                let labels = ds.labels().expect("generators always label");
                let outcomes = run_cell(cfg, &ds);
                cfg.methods
                    .iter()
                    .enumerate()
                    .map(|(mi, m)| {
                        let out = &outcomes[mi];
                        let mut rec = AucRecord {
                            wall_time_ms: out.wall_time_ms,
                            ..record(m)
                        };
                        match out.scores.as_ref().map_err(|e| e.to_string()).and_then(|s| {
                            auc(s, labels).map_err(|e| e.to_string())
                        }) {
                            Ok(a) => rec.auc = Some(a),
                            Err(e) => rec.error = Some(e),
                        }
                        if let (Some(p), Ok(s)) = (raw_partner(&cfg.methods, mi), &out.scores) {
                            if let Ok(raw) = &outcomes[p].scores {
                                rec.spearman_vs_raw = spearman(&s.scores, &raw.scores).ok();
                            }
                        }
                        rec
                    })
                    .collect()
            })
            .collect()
    });

    // Reorder from (dgp, r, b, method) to (dgp, method, r, b).
    let mut keyed: Vec<((usize, usize, usize, usize), AucRecord)> = Vec::new();
    for (&(d, r, b), recs) in cells.iter().zip(per_cell) {
        for (mi, rec) in recs.into_iter().enumerate() {
            keyed.push(((d, mi, r, b), rec));
        }
    }
    keyed.sort_by_key(|(k, _)| *k);
    let records: Vec<AucRecord> = keyed.into_iter().map(|(_, r)| r).collect();
    let summary = BenchmarkResult::summarize(&records);
    Ok(BenchmarkResult { records, summary })
}
