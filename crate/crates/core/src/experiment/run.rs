use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::binning::bin_samples;
use crate::error::{Error, Result};
use crate::experiment::{run_method_detailed, ImageSource, Method, RunConfig, SweepRow};
use crate::grid::RegParams;
use crate::io::{save_image, save_samples, ImageFormat};
use crate::metrics::ssim;
use crate::simulate::{add_noise, subsample, NoiseReport, NoiseSpec, RNG_NAME};

/// Environment variable holding the worker count for experiment cells.
pub const THREADS_ENV: &str = "MERR_THREADS";

/// Workers from [`THREADS_ENV`], else the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodScore {
    pub method: Method,
    pub lambda: f64,
    pub q: f64,
    pub ssim: f64,
    /// Pyramid methods: final and coarse-quadratic cost in the full-resolution problem.
    pub level0_costs: Option<(f64, f64)>,
    /// Every grid point tried, in grid order.
    pub tried: Vec<SweepRow>,
    /// Every pyramid run ended at or below its coarse-quadratic cost.
    pub level0_descent: bool,
    /// Every solve of every grid point ended at or below its starting cost.
    pub solves_descend: bool,
    /// Largest box violation over all solves of all grid points.
    pub box_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub index: usize,
    pub id: String,
    pub image: String,
    pub snr_db: f64,
    pub noise: NoiseReport,
    pub density: f64,
    pub scores: Vec<MethodScore>,
}

impl CellResult {
    pub fn ssim_of(&self, m: Method) -> Option<f64> {
        self.scores.iter().find(|s| s.method == m).map(|s| s.ssim)
    }

    /// `merr >= msda >= l1`, when all three were run.
    pub fn ordering_holds(&self) -> Option<bool> {
        let (a, b, c) = (self.ssim_of(Method::Merr)?, self.ssim_of(Method::Msda)?, self.ssim_of(Method::L1)?);
        Some(a >= b && b >= c)
    }

    pub fn merr_beats_l1(&self) -> Option<bool> {
        Some(self.ssim_of(Method::Merr)? > self.ssim_of(Method::L1)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub rng: &'static str,
    /// Digest of the config and every input file.
    pub input_hash: String,
    pub config: RunConfig,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub cells: Vec<CellResult>,
    /// Cells with all of merr, msda and l1.
    pub comparable: usize,
    pub ordering_holds: usize,
    pub merr_beats_l1: usize,
    pub manifest: Manifest,
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e }
}

fn input_hashes(config: &RunConfig) -> Result<Vec<FileHash>> {
    config
        .images
        .iter()
        .filter_map(|s| match s {
            ImageSource::File { path } => Some(path),
            ImageSource::Phantom { .. } => None,
        })
        .map(|p| {
            let bytes = fs::read(p).map_err(io_err(p))?;
            Ok(FileHash { path: p.display().to_string(), sha256: sha_hex(&bytes) })
        })
        .collect()
}

/// Digest over the serialized config and the contents of its input files.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    let mut h = Sha256::new();
    h.update(config.to_json().as_bytes());
    for f in input_hashes(config)? {
        h.update(f.path.as_bytes());
        h.update(f.sha256.as_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

struct CellPlan {
    index: usize,
    image_index: usize,
    snr_db: f64,
    density: f64,
}

fn plan(config: &RunConfig) -> Vec<CellPlan> {
    let mut cells = Vec::new();
    for image_index in 0..config.images.len() {
        for &snr_db in &config.snr_db {
            for &density in &config.densities {
                cells.push(CellPlan { index: cells.len(), image_index, snr_db, density });
            }
        }
    }
    cells
}

fn cell_seed(base: u64, index: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64 + 1)
}

fn run_cell(config: &RunConfig, cell: &CellPlan) -> Result<CellResult> {
    let source = &config.images[cell.image_index];
    let image = source.label();
    let id = format!("{:03}_{image}_snr{}_d{}", cell.index, cell.snr_db, cell.density);
    let dir = config.output_dir.join("cells").join(&id);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let truth = source.load(config.size, config.seed + cell.image_index as u64)?;
    let seed = cell_seed(config.seed, cell.index);
    let (noisy, noise) = add_noise(&truth, &NoiseSpec::target_snr(cell.snr_db, seed))?;
    let samples = subsample(&noisy, cell.density, seed)?;
    save_image(&truth, dir.join("truth.f32"), ImageFormat::RawF32)?;
    save_image(&noisy, dir.join("noisy.f32"), ImageFormat::RawF32)?;
    save_samples(&samples, dir.join("samples.csv"))?;
    let meta = serde_json::to_vec_pretty(&noise).expect("noise report serializes");
    let meta_path = dir.join("noise.json");
    fs::write(&meta_path, meta).map_err(io_err(&meta_path))?;

    let data = bin_samples(&samples)?;
    let bound = RegParams::default_bound(&data.h);
    let mut scores = Vec::new();
    for &method in &config.methods {
        let grid = config.grids.get(method);
        let mut best: Option<(MethodScore, crate::grid::Image)> = None;
        let mut tried = Vec::new();
        let mut level0_descent = true;
        let mut solves_descend = true;
        let mut box_violation = 0.0f64;
        for &q in &grid.qs {
            for &lambda in &grid.lambdas {
                let run = run_method_detailed(method, &data, &config.params(lambda, q, bound), &config.pyramid)?;
                let score = ssim(&truth, &run.image, &config.ssim)?;
                tried.push(SweepRow { q, lambda, ssim: score });
                solves_descend &= run.solves_descend;
                box_violation = box_violation.max(run.box_violation);
                if let Some((fin, quad)) = run.level0_costs {
                    level0_descent &= fin <= quad;
                }
                if best.as_ref().is_none_or(|(b, _)| score > b.ssim) {
                    let s = MethodScore {
                        method,
                        lambda,
                        q,
                        ssim: score,
                        level0_costs: run.level0_costs,
                        tried: Vec::new(),
                        level0_descent: true,
                        solves_descend: true,
                        box_violation: 0.0,
                    };
                    best = Some((s, run.image));
                }
            }
        }
        let (mut score, img) = best.expect("grid is non-empty");
        score.tried = tried;
        score.level0_descent = level0_descent;
        score.solves_descend = solves_descend;
        score.box_violation = box_violation;
        if config.save_images {
            save_image(&img, dir.join(format!("{}.f32", method.name())), ImageFormat::RawF32)?;
        }
        scores.push(score);
    }
    Ok(CellResult { index: cell.index, id, image, snr_db: cell.snr_db, noise, density: cell.density, scores })
}

fn results_csv(cells: &[CellResult]) -> String {
    let mut out = String::from("cell,image,snr_db,achieved_snr_db,density,method,lambda,q,ssim\n");
    for c in cells {
        for s in &c.scores {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.id,
                c.image,
                c.snr_db,
                c.noise.achieved_snr_db,
                c.density,
                s.method.name(),
                s.lambda,
                s.q,
                s.ssim
            ));
        }
    }
    out
}

fn grid_csv(cells: &[CellResult]) -> String {
    let mut out = String::from("cell,method,q,lambda,ssim\n");
    for c in cells {
        for s in &c.scores {
            for t in &s.tried {
                out.push_str(&format!("{},{},{},{},{}\n", c.id, s.method.name(), t.q, t.lambda, t.ssim));
            }
        }
    }
    out
}

/// One row per cell and one SSIM column per method.
fn table_csv(methods: &[Method], cells: &[CellResult]) -> String {
    let mut out = String::from("image,snr_db,density");
    for m in methods {
        out.push(',');
        out.push_str(m.name());
    }
    out.push('\n');
    for c in cells {
        out.push_str(&format!("{},{},{}", c.image, c.snr_db, c.density));
        for &m in methods {
            out.push_str(&format!(",{:.4}", c.ssim_of(m).unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn flush_tables(config: &RunConfig, cells: &[CellResult]) -> Result<()> {
    let dir = &config.output_dir;
    write_file(&dir.join("results.csv"), results_csv(cells).as_bytes())?;
    write_file(&dir.join("grid.csv"), grid_csv(cells).as_bytes())?;
    write_file(&dir.join("table.csv"), table_csv(&config.methods, cells).as_bytes())
}

fn collect_outputs(root: &Path) -> Result<Vec<FileHash>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.file_name().is_some_and(|n| n != "manifest.json") {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut paths = Vec::new();
    walk(root, &mut paths)?;
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let bytes = fs::read(&p).map_err(io_err(&p))?;
            let rel = p.strip_prefix(root).unwrap_or(&p).to_string_lossy().replace('\\', "/");
            Ok(FileHash { path: rel, sha256: sha_hex(&bytes) })
        })
        .collect()
}

/// Runs every (image, SNR, density) cell with every configured method.
/// Cells run on [`worker_threads`] workers; tables are rewritten after each
/// finished cell, so an interrupted run leaves its completed rows behind.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(&dir.join("config.json"), config.to_json().as_bytes())?;
    let input_hash = config_hash(config)?;

    let cells = plan(config);
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let done: Mutex<Vec<CellResult>> = Mutex::new(Vec::new());
    let errors: Mutex<Vec<(usize, Error)>> = Mutex::new(Vec::new());
    let workers = worker_threads().min(cells.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failed.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let outcome = run_cell(config, cell).and_then(|res| {
                    let mut done = done.lock().expect("results lock");
                    done.push(res);
                    done.sort_by_key(|c| c.index);
                    flush_tables(config, &done)
                });
                if let Err(e) = outcome {
                    failed.store(true, Ordering::Relaxed);
                    errors.lock().expect("error lock").push((i, e));
                }
            });
        }
    });
    let mut errors = errors.into_inner().expect("error lock");
    if !errors.is_empty() {
        errors.sort_by_key(|(i, _)| *i);
        return Err(errors.remove(0).1);
    }
    let cells = done.into_inner().expect("results lock");

    let comparable = cells.iter().filter(|c| c.ordering_holds().is_some()).count();
    let ordering_holds = cells.iter().filter(|c| c.ordering_holds() == Some(true)).count();
    let merr_beats_l1 = cells.iter().filter(|c| c.merr_beats_l1() == Some(true)).count();
    let manifest = Manifest {
        tool: format!("merr {}", env!("CARGO_PKG_VERSION")),
        rng: RNG_NAME,
        input_hash,
        config: config.clone(),
        inputs: input_hashes(config)?,
        outputs: collect_outputs(dir)?,
    };
    write_file(
        &dir.join("manifest.json"),
        &serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(ExperimentReport { cells, comparable, ordering_holds, merr_beats_l1, manifest })
}
