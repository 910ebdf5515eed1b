use std::path::Path;

use merr::experiment::{
    config_hash, run_experiment, sweep_csv, sweep_q, ImageSource, Method, MethodGrid, RunConfig,
};
use merr::io::{save_image, ImageFormat};
use merr::simulate::phantoms::Phantom;
use merr::simulate::{add_noise, subsample, NoiseSpec};

fn tiny(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        output_dir: dir.to_path_buf(),
        size: 32,
        images: vec![ImageSource::Phantom { phantom: Phantom::Blobs }],
        snr_db: vec![14.3],
        densities: vec![0.5],
        ..RunConfig::default()
    };
    cfg.pyramid.n_d = 8;
    cfg.pyramid.coarse_ratio = 2;
    cfg.pyramid.options.solver.max_iter = 60;
    for m in Method::ALL {
        cfg.grids.get_mut(m).lambdas.truncate(2);
    }
    cfg
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn tiny_experiment_reports_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.cells.len(), 1);
    let cell = &report.cells[0];
    assert_eq!(cell.scores.len(), 4);
    for s in &cell.scores {
        assert_eq!(s.tried.len(), 2);
        assert!(s.tried.iter().all(|t| t.ssim <= s.ssim));
        assert!(s.solves_descend && s.box_violation <= 1e-9, "{:?}", s.method);
        assert_eq!(s.level0_costs.is_some(), matches!(s.method, Method::Msda | Method::Merr));
        assert!(s.level0_descent);
    }
    assert_eq!(report.comparable, 1);

    let results = String::from_utf8(read(&dir.path().join("results.csv"))).unwrap();
    assert_eq!(results.lines().count(), 5);
    let grid = String::from_utf8(read(&dir.path().join("grid.csv"))).unwrap();
    assert_eq!(grid.lines().count(), 9);
    let cell_dir = dir.path().join("cells").join(&cell.id);
    for f in ["truth.f32", "noisy.f32", "samples.csv", "samples.csv.json", "noise.json", "merr.f32", "quad.f32"] {
        assert!(cell_dir.join(f).exists(), "{f}");
    }

    let manifest: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("manifest.json"))).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o["path"] == "config.json"));
    assert!(outputs.iter().all(|o| o["path"] != "manifest.json"));
    assert_eq!(manifest["input_hash"], config_hash(&cfg).unwrap());
}

#[test]
fn rerun_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = tiny(a.path());
    cfg.methods = vec![Method::Merr, Method::L1];
    let first = run_experiment(&cfg).unwrap();
    cfg.output_dir = b.path().to_path_buf();
    let second = run_experiment(&cfg).unwrap();
    let files = |m: &serde_json::Value| m["outputs"].clone();
    let (ma, mb) = (
        serde_json::to_value(&first.manifest).unwrap(),
        serde_json::to_value(&second.manifest).unwrap(),
    );
    // config.json differs only by output_dir; every cell file must match
    let cells = |v: serde_json::Value| -> Vec<serde_json::Value> {
        v.as_array().unwrap().iter().filter(|o| o["path"].as_str().unwrap().starts_with("cells/")).cloned().collect()
    };
    assert_eq!(cells(files(&ma)), cells(files(&mb)));
    assert!(!cells(files(&ma)).is_empty());
}

#[test]
fn config_hash_tracks_config_and_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("cells.pgm");
    save_image(&Phantom::Filaments.render(32, 1).unwrap(), &img, ImageFormat::Pgm8).unwrap();
    let mut cfg = tiny(dir.path());
    cfg.images = vec![ImageSource::File { path: img.clone() }];
    let h0 = config_hash(&cfg).unwrap();
    assert_eq!(h0, config_hash(&cfg).unwrap());
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(h0, config_hash(&other).unwrap());
    save_image(&Phantom::Blobs.render(32, 1).unwrap(), &img, ImageFormat::Pgm8).unwrap();
    assert_ne!(h0, config_hash(&cfg).unwrap());
}

#[test]
fn config_json_round_trip_and_validation() {
    let cfg = RunConfig::default();
    assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    let mut bad = cfg.clone();
    bad.grids.merr = MethodGrid::new(&[], &[0.9]);
    assert!(bad.validate().is_err());
    let mut bad = cfg;
    bad.densities.clear();
    assert!(bad.validate().is_err());
}

#[test]
fn sweep_covers_q_by_lambda_grid() {
    let truth = Phantom::GradientSpots.render(32, 2).unwrap();
    let (noisy, _) = add_noise(&truth, &NoiseSpec::target_snr(14.3, 3)).unwrap();
    let samples = subsample(&noisy, 0.5, 3).unwrap();
    let mut cfg = RunConfig::default();
    cfg.pyramid.n_d = 8;
    cfg.pyramid.coarse_ratio = 2;
    cfg.pyramid.options.solver.max_iter = 40;
    let rows = sweep_q(&samples, &truth, &cfg).unwrap();
    assert_eq!(rows.len(), 6 * 7);
    assert!(rows.windows(2).all(|w| w[0].ssim >= w[1].ssim));
    let csv = sweep_csv(&rows);
    assert!(csv.starts_with("q,lambda,ssim\n"));
    assert_eq!(csv.lines().count(), 43);
}
