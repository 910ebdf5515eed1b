//! A small experiment written to a temporary directory: tables, images and
//! a manifest of hashes.

use merr::experiment::{run_experiment, ImageSource, Method, MethodGrid, RunConfig};
use merr::simulate::phantoms::Phantom;

fn main() -> merr::Result<()> {
    let dir = std::env::temp_dir().join("merr-example-experiment");
    let mut cfg = RunConfig {
        output_dir: dir.clone(),
        size: 64,
        images: vec![ImageSource::Phantom { phantom: Phantom::Blobs }],
        snr_db: vec![13.3],
        densities: vec![0.5],
        methods: Method::ALL.to_vec(),
        ..RunConfig::default()
    };
    cfg.pyramid.coarse_ratio = 2;
    cfg.grids.quad = MethodGrid::new(&[1.0], &[0.9]);
    cfg.grids.l1 = MethodGrid::new(&[0.03, 0.1], &[0.9]);
    cfg.grids.msda = MethodGrid::new(&[0.001, 0.003], &[0.5]);
    cfg.grids.merr = MethodGrid::new(&[0.03, 0.1], &[0.9]);
    let report = run_experiment(&cfg)?;
    print!("{}", std::fs::read_to_string(dir.join("table.csv")).unwrap_or_default());
    println!("manifest lists {} output files, input hash {}", report.manifest.outputs.len(), &report.manifest.input_hash[..16]);
    println!("outputs in {}", dir.display());
    Ok(())
}
