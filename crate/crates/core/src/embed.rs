//! Classical (Torgerson) MDS, its goodness of fit, and ISOMAP.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::dist::DistanceMatrix;
use crate::error::{Error, Result};
use crate::functional::{format_f64, LabelVector, LABEL_COLUMN};

const EIGEN_MAX_ITER: usize = 1_000_000;

/// Low-dimensional coordinates together with the full MDS spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `n x d1`, columns ordered by descending eigenvalue.
    pub coords: DMatrix<f64>,
    /// All `n` eigenvalues of the double-centred matrix, descending, unclamped.
    pub eigenvalues: Vec<f64>,
    pub d1: usize,
    pub gof: f64,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    /// GOF for every dimension `1..=n`.
    pub fn gof_curve(&self) -> Vec<f64> {
        gof_curve(&self.eigenvalues)
    }

    /// CSV with header `dim1,...,dimd` and an optional trailing `label` column.
    pub fn write_csv<W: Write>(&self, writer: W, labels: Option<&LabelVector>) -> Result<()> {
        write_coords_csv(&self.coords, labels, writer)
    }
}

pub fn write_coords_csv<W: Write>(
    coords: &DMatrix<f64>,
    labels: Option<&LabelVector>,
    writer: W,
) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != coords.nrows() {
            return Err(Error::LengthMismatch {
                left: coords.nrows(),
                right: l.len(),
            });
        }
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let mut header: Vec<String> = (1..=coords.ncols()).map(|k| format!("dim{k}")).collect();
    if labels.is_some() {
        header.push(LABEL_COLUMN.into());
    }
    w.write_record(&header)?;
    for i in 0..coords.nrows() {
        let mut rec: Vec<String> = coords.row(i).iter().map(|v| format_f64(*v)).collect();
        if let Some(l) = labels {
            rec.push(if l.flags()[i] { "1" } else { "0" }.into());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Share of nonnegative eigenvalue mass retained by the first `d1`
/// eigenvalues. An all-nonpositive spectrum has GOF 1.
pub fn gof_of(eigenvalues: &[f64], d1: usize) -> Result<f64> {
    let n = eigenvalues.len();
    if d1 == 0 || d1 > n {
        return Err(Error::param(format!("d1 = {d1} outside [1, {n}]")));
    }
    if let Some(k) = eigenvalues.windows(2).position(|w| {
        !matches!(w[0].partial_cmp(&w[1]), Some(Ordering::Greater | Ordering::Equal))
    }) {
        return Err(Error::param(format!(
            "eigenvalues not sorted descending at index {k}"
        )));
    }
    let total: f64 = eigenvalues.iter().map(|l| l.max(0.0)).sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    let kept: f64 = eigenvalues[..d1].iter().map(|l| l.max(0.0)).sum();
    Ok(kept / total)
}

fn gof_curve(eigenvalues: &[f64]) -> Vec<f64> {
    let total: f64 = eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let mut acc = 0.0;
    eigenvalues
        .iter()
        .map(|l| {
            acc += l.max(0.0);
            if total == 0.0 {
                1.0
            } else {
                acc / total
            }
        })
        .collect()
}

/// Double-centred Gram matrix `-1/2 J (D∘D) J`.
fn double_centre(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let sq = d.map(|v| v * v);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    // Exact symmetry for the eigensolver.
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    b
}

/// Flip so the largest-magnitude entry is positive; near-ties go to the
/// lowest index.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max * (1.0 - 1e-10))
        .expect("max is attained");
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Classical metric MDS into `d1` dimensions.
pub fn classical_mds(d: &DistanceMatrix, d1: usize) -> Result<Embedding> {
    let n = d.n();
    if d1 == 0 || d1 >= n {
        return Err(Error::param(format!("d1 = {d1} outside [1, {}]", n.saturating_sub(1))));
    }
    let b = double_centre(d.matrix());
    let eig = SymmetricEigen::try_new(b, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }

    let mut coords = DMatrix::zeros(n, d1);
    for (c, &k) in order.iter().take(d1).enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        fix_sign(&mut v);
        let s = eig.eigenvalues[k].max(0.0).sqrt();
        for (i, x) in v.iter().enumerate() {
            coords[(i, c)] = s * x;
        }
    }
    let gof = gof_of(&eigenvalues, d1)?;
    Ok(Embedding {
        coords,
        eigenvalues,
        d1,
        gof,
    })
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State {
        cost: 0.0,
        node: source,
    });
    while let Some(State { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                heap.push(State { cost: c, node: next });
            }
        }
    }
    dist
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut x = x;
    while parent[x] != root {
        let next = parent[x];
        parent[x] = root;
        x = next;
    }
    root
}

/// Shortest-path distances on the symmetrised `k`-nearest-neighbour graph.
/// Disconnected components are joined by the single shortest edge between
/// each pair of components.
pub fn geodesic_distances(d: &DistanceMatrix, k: usize) -> Result<DistanceMatrix> {
    let n = d.n();
    if k == 0 || k >= n {
        return Err(Error::param(format!("k = {k} outside [1, {}]", n.saturating_sub(1))));
    }
    let mut edge = vec![vec![false; n]; n];
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| d.get(i, a).total_cmp(&d.get(i, b)).then(a.cmp(&b)));
        for &j in others.iter().take(k) {
            edge[i][j] = true;
            edge[j][i] = true;
        }
    }

    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if edge[i][j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let comp: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut bridges: HashMap<(usize, usize), (f64, usize, usize)> = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let (ci, cj) = (comp[i], comp[j]);
            if ci == cj {
                continue;
            }
            let key = (ci.min(cj), ci.max(cj));
            let w = d.get(i, j);
            bridges
                .entry(key)
                .and_modify(|best| {
                    if w < best.0 {
                        *best = (w, i, j);
                    }
                })
                .or_insert((w, i, j));
        }
    }
    for &(_, i, j) in bridges.values() {
        edge[i][j] = true;
        edge[j][i] = true;
    }

    let adj: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| edge[i][j])
                .map(|j| (j, d.get(i, j)))
                .collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(&adj, s)).collect();

    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = rows[i][j];
            if !v.is_finite() {
                return Err(Error::Numerical(format!(
                    "no path between {i} and {j} after bridging"
                )));
            }
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    DistanceMatrix::new(g, format!("geodesic:{k}({})", d.metric_tag()))
}

/// Classical MDS on geodesic distances of the `k`-NN graph.
pub fn isomap(d: &DistanceMatrix, k: usize, d1: usize) -> Result<Embedding> {
    let n = d.n();
    if d1 == 0 || d1 >= n {
        return Err(Error::param(format!("d1 = {d1} outside [1, {}]", n.saturating_sub(1))));
    }
    let g = geodesic_distances(d, k)?;
    classical_mds(&g, d1)
}
