//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances and thresholds are fixed here.

use std::process::ExitCode;
use std::time::Instant;

use geofod::bench::{
    auc_values, run_benchmark, spearman, BenchmarkConfig, BenchmarkResult, DgpTemplate,
    MethodSpec, Neighbours, Pipeline,
};
use geofod::dgp::rng::substream_seed;
use geofod::dgp::{
    beta_cdf, draw_template_warp, exp_covariance, generate, BSplineBasis, DgpConfig, DgpName,
    ExpCovarianceProcess, Warp,
};
use geofod::dgp::rng::rng_from_seed;
use geofod::dist::{dtw_distance, lp_distance, pairwise, wasserstein1_distance, MetricSpec};
use geofod::embed::{classical_mds, gof_of};
use geofod::functional::{FunctionalDataset, Grid};
use geofod::score::{lof_from_distances, LofConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const B: usize = 50;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// LOF from its definition, written independently of the library.
fn lof_oracle(d: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let n = d.nrows();
    let mut kdist = vec![0.0; n];
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..n {
        let mut others: Vec<f64> = (0..n).filter(|&b| b != a).map(|b| d[(a, b)]).collect();
        others.sort_by(f64::total_cmp);
        kdist[a] = others[k - 1];
        nbrs[a] = (0..n).filter(|&b| b != a && d[(a, b)] <= kdist[a]).collect();
    }
    let lrd: Vec<f64> = (0..n)
        .map(|a| {
            let s: f64 = nbrs[a].iter().map(|&b| kdist[b].max(d[(a, b)])).sum();
            nbrs[a].len() as f64 / s.max(1e-12)
        })
        .collect();
    (0..n)
        .map(|a| nbrs[a].iter().map(|&b| lrd[b]).sum::<f64>() / nbrs[a].len() as f64 / lrd[a])
        .collect()
}

fn c1_lof_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let metrics = [MetricSpec::lp(1.0), MetricSpec::lp(2.0), MetricSpec::Dtw { window: None }];
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(4..=30);
        let m = rng.random_range(5..=20);
        let grid = Grid::uniform(0.0, 1.0, m).unwrap();
        let values: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let ds = FunctionalDataset::new(grid, values, None).unwrap();
        let metric = metrics[rng.random_range(0..3)];
        let d = pairwise(&ds, metric).unwrap();
        let k = rng.random_range(2..n);
        let got = lof_from_distances(&d, LofConfig::new(k)).unwrap();
        let want = lof_oracle(d.matrix(), k);
        for (g, w) in got.scores.iter().zip(&want) {
            worst = worst.max((g - w).abs() / w.abs().max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-9, format!("max deviation {worst:e} > 1e-9"))?;
    check(secs < 30.0, format!("took {secs:.1} s"))?;
    Ok(format!("max deviation {worst:.1e}, {secs:.2} s"))
}

fn c2_mds_isometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    let mut worst_gof: f64 = 1.0;
    for _ in 0..100 {
        let q = rng.random_range(1..=5);
        let n = rng.random_range(q + 2..=50);
        let pts = DMatrix::from_fn(n, q, |_, _| rng.random_range(-3.0..3.0));
        let d = geofod::dist::DistanceMatrix::euclidean(&pts);
        let emb = classical_mds(&d, q).map_err(|e| e.to_string())?;
        let rec = geofod::dist::DistanceMatrix::euclidean(&emb.coords);
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((rec.get(i, j) - d.get(i, j)).abs());
            }
        }
        worst_gof = worst_gof.min(emb.gof);
    }
    check(worst <= 1e-8, format!("distance error {worst:e}"))?;
    check(worst_gof >= 1.0 - 1e-9, format!("GOF {worst_gof}"))?;
    Ok(format!("max distance error {worst:.1e}, min GOF {worst_gof}"))
}

fn c3_gof() -> Outcome {
    let spot = gof_of(&[4.0, 1.0, 0.0, -0.5], 1).map_err(|e| e.to_string())?;
    check((spot - 0.8).abs() <= 1e-12, format!("GOF(1) = {spot}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..500 {
        let n = rng.random_range(2..=30);
        let mut eig: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..10.0)).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let curve: Vec<f64> = (1..=n).map(|d| gof_of(&eig, d).unwrap()).collect();
        check(curve[n - 1] == 1.0, format!("GOF(n) = {} for {eig:?}", curve[n - 1]))?;
        check(curve.windows(2).all(|w| w[0] <= w[1]), format!("not monotone for {eig:?}"))?;
    }
    Ok("GOF(1)=0.8, GOF(n)=1 and monotone on 500 spectra".into())
}

fn auc_pairs(s: &[f64], l: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..s.len() {
        for j in 0..s.len() {
            if l[i] && !l[j] {
                den += 1.0;
                num += if s[i] > s[j] {
                    1.0
                } else if s[i] == s[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

fn c4_auc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(2..=40);
        let mut l: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        l[0] = true;
        l[n - 1] = false;
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 4.0).collect();
        let a = auc_values(&s, &l).map_err(|e| e.to_string())?;
        worst = worst.max((a - auc_pairs(&s, &l)).abs());
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        worst = worst.max((auc_values(&neg, &l).unwrap() - (1.0 - a)).abs());
    }
    check(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn bench(dgp: DgpTemplate, methods: Vec<MethodSpec>, r: f64, reps: usize, seed: u64) -> Result<BenchmarkResult, String> {
    let cfg = BenchmarkConfig {
        dgps: vec![dgp],
        methods,
        r_values: vec![r],
        replications: reps,
        base_seed: seed,
        embed_dim: 5,
    };
    let res = run_benchmark(&cfg, None).map_err(|e| e.to_string())?;
    if let Some(bad) = res.records.iter().find(|r| r.error.is_some()) {
        return Err(format!("{}: {}", bad.method, bad.error.as_deref().unwrap()));
    }
    Ok(res)
}

fn median_of(res: &BenchmarkResult, method: &MethodSpec) -> f64 {
    let label = method.label();
    res.summary
        .iter()
        .find(|s| s.method == label)
        .and_then(|s| s.median)
        .expect("summary row exists")
}

fn mds5(metric: MetricSpec) -> MethodSpec {
    MethodSpec::new(metric, Pipeline::Mds { dim: Some(5) })
}

fn c5_isolated() -> Outcome {
    let start = Instant::now();
    let l10 = mds5(MetricSpec::lp(10.0));
    let l2 = mds5(MetricSpec::lp(2.0));
    let res = bench(
        DgpTemplate::new(DgpName::SimIsolated, 100),
        vec![l10.clone(), l2.clone()],
        0.05,
        B,
        5,
    )?;
    let (a10, a2) = (median_of(&res, &l10), median_of(&res, &l2));
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("median AUC L10 {a10:.4}, L2 {a2:.4}, {secs:.1} s");
    check(a10 >= 0.95, format!("{msg}: L10 below 0.95"))?;
    check(a10 - a2 >= 0.05, format!("{msg}: gap below 0.05"))?;
    check(secs < 180.0, format!("{msg}: too slow"))?;
    Ok(msg)
}

fn c6_shift() -> Outcome {
    let l2 = mds5(MetricSpec::lp(2.0));
    let res = bench(DgpTemplate::new(DgpName::SimShift, 100), vec![l2.clone()], 0.1, B, 6)?;
    let a = median_of(&res, &l2);
    check(a >= 0.90, format!("median AUC {a:.4} < 0.90"))?;
    Ok(format!("median AUC {a:.4}"))
}

fn c7_consistency() -> Outcome {
    let mut rhos = Vec::new();
    for s in 0..20u64 {
        let cfg = DgpConfig::new(DgpName::Dgp2, 200, 0.1, substream_seed(7, s));
        let ds = generate(&cfg).map_err(|e| e.to_string())?;
        let d = pairwise(&ds, MetricSpec::lp(2.0)).map_err(|e| e.to_string())?;
        let raw = MethodSpec::new(MetricSpec::lp(2.0), Pipeline::Raw).score(&d, 5);
        let emb = mds5(MetricSpec::lp(2.0)).score(&d, 5);
        let (raw, emb) = (raw.map_err(|e| e.to_string())?, emb.map_err(|e| e.to_string())?);
        rhos.push(spearman(&raw.scores, &emb.scores).map_err(|e| e.to_string())?);
    }
    rhos.sort_by(f64::total_cmp);
    let med = (rhos[9] + rhos[10]) / 2.0;
    check(med >= 0.95, format!("median Spearman {med:.4} < 0.95"))?;
    Ok(format!("median Spearman {med:.4} (min {:.4})", rhos[0]))
}

fn c8_derivative() -> Outcome {
    let plain = mds5(MetricSpec::lp(2.0));
    let deriv = mds5(MetricSpec::lp(2.0)).with_deriv(true);
    let res = bench(
        DgpTemplate::new(DgpName::SimShape, 100).with_param("shift_sd", 4.0),
        vec![plain.clone(), deriv.clone()],
        0.1,
        B,
        8,
    )?;
    let (a, ad) = (median_of(&res, &plain), median_of(&res, &deriv));
    let msg = format!("median AUC without {a:.4}, with derivative {ad:.4}");
    check(ad >= a, format!("{msg}: derivative worse"))?;
    check(ad >= 0.90, format!("{msg}: below 0.90"))?;
    Ok(msg)
}

fn c9_isomap() -> Outcome {
    let iso = |k| {
        MethodSpec::new(
            MetricSpec::lp(2.0),
            Pipeline::Isomap { k, dim: Some(5) },
        )
    };
    let (i5, i90, full, mds) = (
        iso(Neighbours::Fixed(5)),
        iso(Neighbours::Fixed(90)),
        iso(Neighbours::All),
        mds5(MetricSpec::lp(2.0)),
    );
    let res = bench(
        DgpTemplate::new(DgpName::Dgp1, 100),
        vec![i5.clone(), i90.clone(), full.clone(), mds.clone()],
        0.1,
        B,
        9,
    )?;
    let (a5, a90, af, am) = (
        median_of(&res, &i5),
        median_of(&res, &i90),
        median_of(&res, &full),
        median_of(&res, &mds),
    );
    let msg = format!("median AUC isomap5 {a5:.4}, isomap90 {a90:.4}, isomap99 {af:.4}, mds {am:.4}");
    check(a90 >= a5, format!("{msg}: isomap90 below isomap5"))?;
    check((af - am).abs() <= 0.02, format!("{msg}: full graph differs from MDS"))?;
    Ok(msg)
}

fn c10_determinism() -> Outcome {
    let cfg = BenchmarkConfig {
        dgps: vec![
            DgpTemplate::new(DgpName::Dgp1, 60),
            DgpTemplate::new(DgpName::Dgp3, 40),
            DgpTemplate::new(DgpName::SimShape, 50).with_param("shift_sd", 4.0),
        ],
        methods: vec![
            MethodSpec::new(MetricSpec::lp(2.0), Pipeline::Raw),
            mds5(MetricSpec::lp(2.0)),
            MethodSpec::new(MetricSpec::Wasserstein1, Pipeline::Isomap { k: Neighbours::Fixed(10), dim: Some(3) }),
            MethodSpec::new(MetricSpec::Dtw { window: Some(5) }, Pipeline::Mds { dim: Some(3) }).with_deriv(true),
        ],
        r_values: vec![0.05, 0.1],
        replications: 4,
        base_seed: 10,
        embed_dim: 5,
    };
    let csv = |jobs| -> Result<Vec<u8>, String> {
        let res = run_benchmark(&cfg, Some(jobs)).map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        res.write_records_csv(&mut out).map_err(|e| e.to_string())?;
        Ok(out)
    };
    let (a, b, c) = (csv(1)?, csv(8)?, csv(8)?);
    check(a == b && b == c, "record CSVs differ between runs")?;
    Ok(format!("{} byte record CSV identical for jobs 1 and 8", a.len()))
}

fn c11_distance_fixtures() -> Outcome {
    let unit = |m| Grid::uniform(0.0, 1.0, m).unwrap();
    let g = unit(1001);
    let t: Vec<f64> = g.points().to_vec();
    let zero = vec![0.0; t.len()];
    let l2 = lp_distance(&t, &zero, &g, 2.0).unwrap();
    check((l2 - 1.0 / 3f64.sqrt()).abs() <= 1e-4, format!("L2(t, 0) = {l2}"))?;
    let l1 = lp_distance(&t, &zero, &g, 1.0).unwrap();
    check((l1 - 0.5).abs() <= 1e-6, format!("L1(t, 0) = {l1}"))?;

    // A unit-mass box on [0, 0.5] against one on [0.5, 1]: mass moves by 0.5.
    let box_a: Vec<f64> = t.iter().map(|&s| if s <= 0.5 { 2.0 } else { 0.0 }).collect();
    let box_b: Vec<f64> = t.iter().map(|&s| if s >= 0.5 { 2.0 } else { 0.0 }).collect();
    let w = wasserstein1_distance(&box_a, &box_b, &g).unwrap();
    check((w - 0.5).abs() <= 1e-3, format!("W1 boxes = {w}"))?;
    let bump = |c: f64| -> Vec<f64> { t.iter().map(|&s| (1.0 - (s - c).abs() / 0.1).max(0.0) * 10.0).collect() };
    let ws = wasserstein1_distance(&bump(0.3), &bump(0.55), &g).unwrap();
    check((ws - 0.25).abs() <= 1e-6, format!("W1 shifted bumps = {ws}"))?;

    let rep = [0.0, 0.0, 1.0, 2.0];
    let d = dtw_distance(&[0.0, 1.0, 2.0], &rep, None).unwrap();
    check(d == 0.0, format!("DTW of a repeated sample = {d}"))?;

    // Triangle inequality fails for DTW: search short integer series.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut draw = || -> [f64; 3] { [0, 1, 2].map(|_| rng.random_range(0..3) as f64) };
    let mut found = None;
    for _ in 0..20_000 {
        let (a, b, c) = (draw(), draw(), draw());
        let ab = dtw_distance(&a, &b, None).unwrap();
        let bc = dtw_distance(&b, &c, None).unwrap();
        let ac = dtw_distance(&a, &c, None).unwrap();
        if ac > ab + bc + 1e-9 {
            found = Some((ab, bc, ac));
            break;
        }
    }
    let (ab, bc, ac) = found.ok_or("no DTW triangle violation found")?;
    check(ac > ab + bc + 1e-12, format!("no violation: {ac} vs {ab} + {bc}"))?;
    Ok(format!("L2 {l2:.6}, L1 {l1:.6}, W1 {w:.4}, DTW violation {ac:.3} > {:.3}", ab + bc))
}

fn c12_generators() -> Outcome {
    for name in DgpName::all() {
        for (n, r) in [(100, 0.1), (54, 0.09), (1000, 0.01)] {
            let cfg = DgpConfig::new(name, n, r, 12);
            let ds = generate(&cfg).map_err(|e| e.to_string())?;
            let labels = ds.labels().ok_or("unlabelled")?;
            let want = if name == DgpName::PhaseI { 0 } else { cfg.n_outliers() };
            check(
                ds.n() == n && labels.n_outliers() == want,
                format!("{name} n={n} r={r}: {} outliers", labels.n_outliers()),
            )?;
            if n == 100 {
                let again = generate(&cfg).unwrap();
                check(again.values() == ds.values(), format!("{name} not deterministic"))?;
                let other = generate(&DgpConfig { seed: 13, ..cfg.clone() }).unwrap();
                check(other.values() != ds.values(), format!("{name} ignores the seed"))?;
            }
        }
    }

    let mut rng = rng_from_seed(12);
    let ts: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let mut warps = vec![Warp::Beta { a: 0.5, b: 3.0 }, Warp::Beta { a: 4.0, b: 4.0 }];
    for variant in [3u8, 4] {
        for outlier in [false, true] {
            for _ in 0..20 {
                warps.push(draw_template_warp(variant, outlier, &mut rng).map_err(|e| e.to_string())?);
            }
        }
    }
    for w in &warps {
        let v: Vec<f64> = ts.iter().map(|&t| w.apply(t)).collect();
        check(v[0].abs() <= 1e-12 && (v[200] - 1.0).abs() <= 1e-12, format!("{w:?} endpoints"))?;
        check(v.windows(2).all(|p| p[1] >= p[0]), format!("{w:?} not monotone"))?;
    }
    check((beta_cdf(0.5, 2.0, 2.0) - 0.5).abs() < 1e-12, "beta cdf midpoint")?;

    for k in [4, 15, 25] {
        let basis = BSplineBasis::clamped_uniform(k, 3).map_err(|e| e.to_string())?;
        for &t in &ts {
            let s: f64 = basis.eval(t).iter().sum();
            check((s - 1.0).abs() <= 1e-9, format!("k={k} t={t}: sum {s}"))?;
        }
    }

    let grid = Grid::uniform(0.0, 1.0, 50).unwrap();
    let gp = ExpCovarianceProcess::new(&grid).map_err(|e| e.to_string())?;
    let cov = exp_covariance(&grid);
    let mut rng = rng_from_seed(2000);
    let mut emp = DMatrix::<f64>::zeros(50, 50);
    for _ in 0..2000 {
        let x = nalgebra::DVector::from_vec(gp.sample(&mut rng));
        emp += &x * x.transpose();
    }
    emp /= 2000.0;
    let rel = (&emp - &cov).norm() / cov.norm();
    check(rel <= 0.15, format!("relative Frobenius error {rel:.4}"))?;
    Ok(format!(
        "{} DGPs, {} warps, GP relative Frobenius error {rel:.4}",
        DgpName::all().count(),
        warps.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("LOF matches brute-force definition", c1_lof_oracle),
        ("MDS is an isometry on Euclidean clouds", c2_mds_isometry),
        ("GOF spot value, endpoint and monotonicity", c3_gof),
        ("AUC matches pair counting", c4_auc_oracle),
        ("L10 detects isolated outliers", c5_isolated),
        ("MDS-5 detects shift outliers", c6_shift),
        ("raw and embedded LOF agree", c7_consistency),
        ("derivative preprocessing helps shape outliers", c8_derivative),
        ("ISOMAP neighbourhood ordering", c9_isomap),
        ("benchmark is deterministic across thread counts", c10_determinism),
        ("distance fixtures", c11_distance_fixtures),
        ("generator contracts", c12_generators),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
