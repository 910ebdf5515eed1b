//! Command-line front end. Exit codes: 0 success, 2 usage error, 3 data
//! error, 4 solver divergence.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use merr::experiment::{
    run_experiment, run_method, sweep_csv, sweep_q, worker_threads, Method, PyramidConfig, RunConfig, THREADS_ENV,
};
use merr::io::{load_image, load_pgm, load_samples, save_image, save_samples, ImageFormat};
use merr::metrics::{ssim, SsimParams};
use merr::multires::InterpFilter;
use merr::simulate::phantoms::Phantom;
use merr::simulate::{add_noise, subsample, NoiseSpec};
use merr::{bin_samples, Error, Image, RegParams};

#[derive(Parser)]
#[command(name = "merr", version, about = "Image reconstruction from scattered confocal samples")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bin a sample CSV into measurement and weight images.
    Bin {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out_h: PathBuf,
        #[arg(long)]
        out_c: PathBuf,
    },
    /// Add calibrated noise to an image and draw random samples from it.
    Simulate {
        #[arg(long = "in", required_unless_present = "phantom", conflicts_with = "phantom")]
        input: Option<PathBuf>,
        /// Render a synthetic truth instead: blobs, filaments or gradient-spots.
        #[arg(long)]
        phantom: Option<String>,
        /// Side length of the rendered phantom.
        #[arg(long, default_value_t = 128)]
        size: usize,
        /// Also write the clean image (raw f32).
        #[arg(long)]
        out_truth: Option<PathBuf>,
        /// Target SNR in dB. Ignored when --gain is given.
        #[arg(long, default_value_t = 13.3)]
        snr: f64,
        /// Explicit Poisson gain instead of a target SNR.
        #[arg(long)]
        gain: Option<f64>,
        /// Gaussian standard deviation used with --gain.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_samples: PathBuf,
        #[arg(long)]
        out_noisy: Option<PathBuf>,
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Reconstruct an image from a sample CSV.
    Reconstruct {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value = "merr")]
        method: String,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.9)]
        q: f64,
        /// MSDA roughness exponent.
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long, default_value_t = 16)]
        nd: usize,
        #[arg(long, default_value_t = 4)]
        coarse_ratio: usize,
        /// linear-spline, binomial or binomial-normalized.
        #[arg(long, default_value = "linear-spline")]
        filter: String,
        /// Upper pixel bound; defaults to 5% above the brightest sample.
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long, default_value_t = 300)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        /// Print per-iteration residuals to stderr.
        #[arg(long)]
        verbose: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// SSIM between a reference and a test image.
    Evaluate {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Score a method over the q x lambda grid against a ground truth.
    Sweep {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Base config; its `sweep` and `pyramid` sections are used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Write the default config to this path and exit.
        #[arg(long)]
        write_default: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Usage(_) | Failure::Lib(Error::InvalidParameter(_) | Error::DensityOutOfRange(_)) => 2,
        Failure::Lib(Error::NonFiniteCost { .. }) => 4,
        Failure::Lib(_) => 3,
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn image_format(path: &Path) -> CliResult<ImageFormat> {
    ImageFormat::from_path(path)
        .ok_or_else(|| Failure::Usage(format!("{}: use a .pgm or .f32 extension", path.display())))
}

fn read_image(path: &Path) -> CliResult<Image> {
    Ok(match image_format(path)? {
        ImageFormat::RawF32 => load_image(path, ImageFormat::RawF32)?,
        _ => load_pgm(path)?.0,
    })
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| Failure::Lib(Error::Io { path: path.to_path_buf(), source: e }))
}

fn read_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    Ok(RunConfig::from_json(&text)?)
}

fn parse_method(s: &str) -> CliResult<Method> {
    Method::parse(s).map_err(|_| Failure::Usage(format!("unknown method {s:?}; expected quad, l1, msda or merr")))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Bin { samples, out_h, out_c } => {
            let data = bin_samples(&load_samples(&samples, None)?)?;
            save_image(&data.h, &out_h, ImageFormat::RawF32)?;
            save_image(&data.c, &out_c, ImageFormat::RawF32)?;
        }
        Cmd::Simulate { input, phantom, size, out_truth, snr, gain, sigma, density, seed, out_samples, out_noisy, meta } => {
            let img = match (input, phantom) {
                (Some(p), _) => read_image(&p)?,
                (None, Some(name)) => Phantom::ALL
                    .into_iter()
                    .find(|p| p.name() == name)
                    .ok_or_else(|| Failure::Usage(format!("unknown phantom {name:?}")))?
                    .render(size, seed)?,
                (None, None) => return Err(Failure::Usage("--in or --phantom is required".into())),
            };
            if let Some(p) = out_truth {
                save_image(&img, &p, ImageFormat::RawF32)?;
            }
            let spec = match gain {
                Some(g) => NoiseSpec::explicit(g, sigma, seed),
                None => NoiseSpec::target_snr(snr, seed),
            };
            let (noisy, report) = add_noise(&img, &spec)?;
            save_samples(&subsample(&noisy, density, seed)?, &out_samples)?;
            if let Some(p) = out_noisy {
                save_image(&noisy, &p, ImageFormat::RawF32)?;
            }
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            match meta {
                Some(p) => write(&p, json.as_bytes())?,
                None => emit(&format!("{json}\n")),
            }
        }
        Cmd::Reconstruct { samples, method, lambda, q, r, nd, coarse_ratio, filter, bound, max_iter, tol, verbose, out } => {
            let method = parse_method(&method)?;
            let filter: InterpFilter = serde_json::from_value(serde_json::Value::String(filter.clone()))
                .map_err(|_| Failure::Usage(format!("unknown filter {filter:?}")))?;
            let data = bin_samples(&load_samples(&samples, None)?)?;
            let params = RegParams {
                lambda,
                q,
                r,
                bound_m: bound.unwrap_or_else(|| RegParams::default_bound(&data.h)),
                ..RegParams::default()
            };
            let mut pyramid = PyramidConfig { n_d: nd, coarse_ratio, ..PyramidConfig::default() };
            pyramid.options.filter = filter;
            pyramid.options.solver.max_iter = max_iter;
            pyramid.options.solver.tol_rel = tol;
            pyramid.options.solver.verbose = verbose;
            let u = run_method(method, &data, &params, &pyramid)?;
            save_image(&u, &out, image_format(&out)?)?;
        }
        Cmd::Evaluate { reference, test } => {
            let (a, b) = (read_image(&reference)?, read_image(&test)?);
            let value = ssim(&a, &b, &SsimParams::default())?;
            emit(&format!("ssim={value}\n"));
            let record = serde_json::json!({
                "reference": reference.display().to_string(),
                "test": test.display().to_string(),
                "ssim": value,
            });
            emit(&format!("{record}\n"));
        }
        Cmd::Sweep { samples, truth, config, method, lambda, out } => {
            let mut cfg = match config {
                Some(p) => read_config(&p)?,
                None => RunConfig::default(),
            };
            if let Some(m) = method {
                cfg.sweep.method = parse_method(&m)?;
            }
            if let Some(l) = lambda {
                cfg.sweep.base_lambda = l;
            }
            let rows = sweep_q(&load_samples(&samples, None)?, &read_image(&truth)?, &cfg)?;
            write(&out, sweep_csv(&rows).as_bytes())?;
            if let Some(best) = rows.first() {
                emit(&format!("best q={} lambda={} ssim={}\n", best.q, best.lambda, best.ssim));
            }
        }
        Cmd::Experiment { config, out_dir, write_default } => {
            if let Some(p) = write_default {
                return write(&p, RunConfig::default().to_json().as_bytes());
            }
            let mut cfg = match config {
                Some(p) => read_config(&p)?,
                None => return Err(Failure::Usage("--config or --write-default is required".into())),
            };
            if let Some(d) = out_dir {
                cfg.output_dir = d;
            }
            eprintln!("running on {} worker(s); set {THREADS_ENV} to change", worker_threads());
            let report = run_experiment(&cfg)?;
            emit(&fs::read_to_string(cfg.output_dir.join("table.csv")).unwrap_or_default());
            emit(&format!(
                "ordering merr>=msda>=l1: {}/{}; merr>l1: {}/{}\n",
                report.ordering_holds, report.comparable, report.merr_beats_l1, report.comparable
            ));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("usage error: {msg}"),
                Failure::Lib(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
