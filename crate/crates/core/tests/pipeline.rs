use geofod::bench::auc;
use geofod::dgp::{generate, DgpConfig, DgpName};
use geofod::dist::{pairwise, DistanceMatrix, MetricSpec};
use geofod::embed::{classical_mds, isomap};
use geofod::functional::{load_csv, LABEL_COLUMN};
use geofod::score::{lof_from_distances, lof_on_embedding, LofConfig};

#[test]
fn dataset_and_distances_survive_files() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate(&DgpConfig::new(DgpName::Dgp3, 40, 0.1, 5)).unwrap();
    let path = dir.path().join("data.csv");
    ds.save_csv(&path).unwrap();
    let back = load_csv(&path, true, Some(LABEL_COLUMN)).unwrap();
    assert_eq!(back.values(), ds.values());
    assert_eq!(back.grid(), ds.grid());
    assert_eq!(back.labels(), ds.labels());

    let d = pairwise(&back, MetricSpec::Wasserstein1).unwrap();
    let dpath = dir.path().join("d.csv");
    d.save_csv(&dpath).unwrap();
    let d2 = DistanceMatrix::load_csv(&dpath).unwrap();
    assert_eq!(d2.matrix(), d.matrix());
}

#[test]
fn shift_outliers_rank_first_on_every_route() {
    let ds = generate(&DgpConfig::new(DgpName::SimShift, 100, 0.1, 21)).unwrap();
    let labels = ds.labels().unwrap();
    let d = pairwise(&ds, MetricSpec::lp(2.0)).unwrap();
    let cfg = LofConfig::default_for(ds.n()).unwrap();
    let raw = lof_from_distances(&d, cfg).unwrap();
    let mds = lof_on_embedding(&classical_mds(&d, 5).unwrap(), cfg).unwrap();
    let iso = lof_on_embedding(&isomap(&d, 20, 5).unwrap(), cfg).unwrap();
    for s in [&raw, &mds, &iso] {
        assert!(auc(s, labels).unwrap() > 0.9, "{}", s.method_tag);
    }
}

#[test]
fn derivative_removes_vertical_shifts() {
    let ds = generate(&DgpConfig::new(DgpName::SimShape, 60, 0.1, 2).with_param("shift_sd", 4.0)).unwrap();
    let shifted: Vec<Vec<f64>> = ds.values().iter().map(|r| r.iter().map(|v| v + 100.0).collect()).collect();
    let moved = geofod::functional::FunctionalDataset::new(ds.grid().clone(), shifted, None).unwrap();
    let a = pairwise(&ds.to_derivative().unwrap(), MetricSpec::lp(2.0)).unwrap();
    let b = pairwise(&moved.to_derivative().unwrap(), MetricSpec::lp(2.0)).unwrap();
    assert!((a.matrix() - b.matrix()).amax() < 1e-9);
}
