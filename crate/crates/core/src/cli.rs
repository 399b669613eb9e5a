//! Command-line front end.
//!
//! Configuration precedence: flags, then the JSON config file, then the
//! `CSCOVQ_SEED` environment variable (seed only), then built-in defaults.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::channel::{bsc_channel, ChannelModel};
use crate::config::{RawConfig, RunManifest};
use crate::covq::{train, Init, TrainedQuantizer};
use crate::error::{Error, Result};
use crate::evaluation::{
    build_training_data, evaluate_nmse, experiment_phi, init_seed, read_csv, run_alpha_sweep, run_epsilon_sweep,
    run_rate_sweep, system_from_codebook, write_csv, ExperimentConfig, ResultRow, Scheme, SweepReport,
    ALPHA_SWEEP_EPSILONS, RATE_SWEEP_EPSILONS, EPSILON_GRID,
};
use crate::parallel::Exec;
use crate::persist::{ChannelRef, QuantizerFile};
use crate::plot::render_svg;

pub const SEED_ENV: &str = "CSCOVQ_SEED";

#[derive(Debug, Parser)]
#[command(name = "cscovq", version, about = "Channel-optimized vector quantization of compressed-sensing measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one quantizer and save it as a text file.
    Train {
        #[command(flatten)]
        common: Common,
        /// COVQ-E2E, COVQ-Q or CUVQ-E2E.
        #[arg(long, default_value = "COVQ-E2E")]
        scheme: Scheme,
        /// Design cross-over probability (ignored for CUVQ-E2E).
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Design channel from a transition-matrix file instead of a BSC.
        #[arg(long)]
        channel_file: Option<PathBuf>,
    },
    /// Evaluate a saved quantizer and write one result row.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        quantizer: PathBuf,
        /// Evaluation cross-over probability (defaults to the design channel).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Evaluation channel from a transition-matrix file.
        #[arg(long)]
        channel_file: Option<PathBuf>,
    },
    /// NMSE versus cross-over probability.
    SweepEpsilon {
        #[command(flatten)]
        common: Common,
    },
    /// NMSE versus measurement rate α.
    SweepAlpha {
        #[command(flatten)]
        common: Common,
    },
    /// NMSE versus quantization rate B.
    SweepRate {
        #[command(flatten)]
        common: Common,
    },
    /// Render a results CSV as an SVG line chart.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
    /// Repeat a run from its manifest.json.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (defaults to the manifest's).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Training-set size T.
    #[arg(long)]
    pub training_size: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Draw a fresh sensing matrix for every training sample and trial.
    #[arg(long)]
    pub redraw_phi: bool,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<Scheme>>,
    /// Average over this many seeds (seed, seed + 1, …).
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Record wall-clock seconds in the wall_s column (makes the CSV non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Also write results.svg.
    #[arg(long)]
    pub svg: bool,
}

/// Failures classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration: exit 2.
    Usage(Error),
    /// Failure while computing: exit 1.
    Run(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(_) => 1,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            Failure::Usage(e) | Failure::Run(e) => e,
        }
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e)
}

fn run_err(e: Error) -> Failure {
    Failure::Run(e)
}

impl Common {
    /// Merges config file, flags and the seed environment variable.
    fn resolve(&self, defaults: &ExperimentConfig) -> Result<ExperimentConfig> {
        let mut raw = match &self.config {
            Some(p) => RawConfig::from_file(p)?,
            None => RawConfig::default(),
        };
        if let Some(v) = self.seed {
            raw.seed = Some(v);
        }
        if raw.seed.is_none() {
            if let Ok(v) = std::env::var(SEED_ENV) {
                raw.seed = Some(v.trim().parse().map_err(|_| Error::Parse(format!("{SEED_ENV}={v:?} is not a u64")))?);
            }
        }
        if let Some(v) = self.trials {
            raw.trials = Some(v);
        }
        if let Some(v) = self.training_size {
            raw.training_size = Some(v);
        }
        if let Some(v) = self.max_iter {
            raw.max_iter = Some(v);
        }
        if self.redraw_phi {
            raw.redraw_phi = Some(true);
        }
        if let Some(v) = &self.epsilons {
            raw.epsilons = Some(v.clone());
        }
        if let Some(v) = &self.alphas {
            raw.alphas = Some(v.clone());
        }
        if let Some(v) = &self.rates {
            raw.rates = Some(v.clone());
        }
        if let Some(v) = &self.schemes {
            raw.schemes = Some(v.clone());
        }
        if let Some(v) = self.seeds {
            raw.seeds = Some(v);
        }
        raw.resolve(defaults)
    }
}

fn defaults_with_epsilons(eps: &[f64]) -> ExperimentConfig {
    ExperimentConfig { epsilons: eps.to_vec(), ..Default::default() }
}

fn install_workers(workers: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidInput("--workers must be at least 1".into()));
        }
        // Only the first call can configure the global pool; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
    Ok(())
}

fn write_results(dir: &Path, rows: &[ResultRow], with_timing: bool, svg: Option<&str>) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(rows, with_timing, &mut buf)?;
    fs::write(dir.join("results.csv"), buf)?;
    if let Some(title) = svg {
        fs::write(dir.join("results.svg"), render_svg(rows, title)?)?;
    }
    Ok(())
}

/// Parses `argv` and runs the command. Returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.error());
            f.exit_code()
        }
    }
}

pub fn run(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Train { common, scheme, epsilon, channel_file } => {
            let cfg = common.resolve(&ExperimentConfig::default()).map_err(usage)?;
            let mut manifest = RunManifest::new("train", cfg, common.out.clone());
            manifest.scheme = Some(scheme);
            manifest.epsilon = Some(epsilon);
            manifest.channel_file = channel_file;
            manifest.with_timing = common.timing;
            execute(&manifest, common.workers, common.svg)
        }
        Command::Eval { common, quantizer, epsilon, channel_file } => {
            let file = QuantizerFile::load(&quantizer).map_err(usage)?;
            let defaults = ExperimentConfig {
                m: file.m,
                k: file.k,
                n: file.n,
                alpha: file.n as f64 / file.m as f64,
                bits: file.codebook.bits(),
                ..Default::default()
            };
            let mut cfg = common.resolve(&defaults).map_err(usage)?;
            if common.config.is_none() {
                cfg.n = file.n;
                cfg.alpha = file.n as f64 / file.m as f64;
            }
            let mut manifest = RunManifest::new("eval", cfg, common.out.clone());
            manifest.quantizer = Some(quantizer);
            manifest.epsilon = epsilon;
            manifest.channel_file = channel_file;
            manifest.with_timing = common.timing;
            execute(&manifest, common.workers, common.svg)
        }
        Command::SweepEpsilon { common } => sweep("sweep-epsilon", &common, &EPSILON_GRID),
        Command::SweepAlpha { common } => sweep("sweep-alpha", &common, &ALPHA_SWEEP_EPSILONS),
        Command::SweepRate { common } => sweep("sweep-rate", &common, &RATE_SWEEP_EPSILONS),
        Command::Plot { input, out, title } => {
            let file = fs::File::open(&input).map_err(|e| usage(e.into()))?;
            let rows = read_csv(file).map_err(usage)?;
            let title = title.unwrap_or_else(|| "NMSE (dB)".to_string());
            let svg = render_svg(&rows, &title).map_err(run_err)?;
            fs::write(&out, svg).map_err(|e| run_err(e.into()))?;
            Ok(())
        }
        Command::Rerun { manifest, out, workers } => {
            let mut m = RunManifest::load(&manifest).map_err(usage)?;
            if let Some(dir) = out {
                m.output_dir = dir;
            }
            execute(&m, workers, false)
        }
    }
}

fn sweep(name: &str, common: &Common, epsilons: &[f64]) -> std::result::Result<(), Failure> {
    let cfg = common.resolve(&defaults_with_epsilons(epsilons)).map_err(usage)?;
    if name == "sweep-rate" {
        cfg.validate_rates().map_err(usage)?;
    }
    let mut manifest = RunManifest::new(name, cfg, common.out.clone());
    manifest.with_timing = common.timing;
    execute(&manifest, common.workers, common.svg)
}

/// Runs the command described by a manifest, writing the manifest first.
pub fn execute(manifest: &RunManifest, workers: Option<usize>, svg: bool) -> std::result::Result<(), Failure> {
    install_workers(workers).map_err(usage)?;
    let dir = &manifest.output_dir;
    fs::create_dir_all(dir).map_err(|e| usage(e.into()))?;
    manifest.save(&dir.join("manifest.json")).map_err(run_err)?;
    let cfg = &manifest.config;
    let exec = Exec::Parallel;
    let title = |t: &str| if svg { Some(t.to_string()) } else { None };

    match manifest.command.as_str() {
        "sweep-epsilon" | "sweep-alpha" | "sweep-rate" => {
            eprintln!("{}: M={} K={} B={} N={} trials={} T={} seed={}", manifest.command, cfg.m, cfg.k, cfg.bits, cfg.n, cfg.trials, cfg.training_size, cfg.seed);
            let report: SweepReport = match manifest.command.as_str() {
                "sweep-epsilon" => run_epsilon_sweep(cfg, exec),
                "sweep-alpha" => run_alpha_sweep(cfg, exec),
                _ => run_rate_sweep(cfg, exec),
            }
            .map_err(run_err)?;
            for r in &report.rows {
                eprintln!(
                    "  {:<8} N={:<3} B={:<2} eps={:<6} NMSE {:>8.4} dB",
                    r.scheme.label(),
                    r.n,
                    r.bits,
                    r.epsilon.map(|e| e.to_string()).unwrap_or_default(),
                    r.nmse_db
                );
            }
            let t = title(&manifest.command);
            write_results(dir, &report.rows, manifest.with_timing, t.as_deref()).map_err(run_err)
        }
        "train" => {
            let scheme = manifest.scheme.unwrap_or(Scheme::CovqE2e);
            let (channel, channel_ref) = match (&manifest.channel_file, scheme) {
                (_, Scheme::CuvqE2e) => (ChannelModel::identity(cfg.bits).map_err(usage)?, ChannelRef::Bsc(0.0)),
                (Some(p), _) => {
                    let ch = ChannelModel::load(p).map_err(usage)?;
                    if ch.bits() != cfg.bits {
                        return Err(usage(Error::InvalidInput(format!("channel file has {} bits, config B={}", ch.bits(), cfg.bits))));
                    }
                    (ch, ChannelRef::File(p.clone()))
                }
                (None, _) => {
                    let eps = manifest.epsilon.unwrap_or(0.0);
                    (bsc_channel(cfg.bits, eps).map_err(usage)?, ChannelRef::Bsc(eps))
                }
            };
            let phi = experiment_phi(cfg, cfg.n).map_err(run_err)?;
            let data = build_training_data(&phi, cfg, exec).map_err(run_err)?;
            let samples = if scheme == Scheme::CovqQ { &data.measurements } else { &data.estimates };
            let q: TrainedQuantizer = train(samples, &channel, Init::Seed(init_seed(cfg.seed, cfg.bits)), cfg.train_params(exec)).map_err(run_err)?;
            eprintln!(
                "train: {scheme} B={} iterations={} converged={} final D={}",
                cfg.bits,
                q.iterations,
                q.converged,
                q.history.last().copied().unwrap_or(f64::NAN)
            );
            let file = QuantizerFile { scheme, m: cfg.m, n: cfg.n, k: cfg.k, phi_seed: cfg.seed, channel: channel_ref, codebook: q.codebook };
            file.save(&dir.join("quantizer.txt")).map_err(run_err)
        }
        "eval" => {
            let path = manifest.quantizer.as_ref().ok_or_else(|| usage(Error::InvalidInput("manifest has no quantizer".into())))?;
            let file = QuantizerFile::load(path).map_err(usage)?;
            if (file.m, file.n, file.k) != (cfg.m, cfg.n, cfg.k) {
                return Err(usage(Error::InvalidInput(format!(
                    "quantizer is for M={} N={} K={}, config has M={} N={} K={}",
                    file.m, file.n, file.k, cfg.m, cfg.n, cfg.k
                ))));
            }
            let bits = file.codebook.bits();
            let eval_cfg = ExperimentConfig { bits, ..cfg.clone() };
            let design = file.channel.load(bits).map_err(usage)?;
            let channel = match (&manifest.channel_file, manifest.epsilon) {
                (Some(p), _) => ChannelModel::load(p).map_err(usage)?,
                (None, Some(eps)) => bsc_channel(bits, eps).map_err(usage)?,
                (None, None) => design.clone(),
            };
            let phi_cfg = ExperimentConfig { seed: file.phi_seed, ..eval_cfg.clone() };
            let phi = experiment_phi(&phi_cfg, cfg.n).map_err(run_err)?;
            let quantizer = TrainedQuantizer::from_codebook(file.codebook, design).map_err(run_err)?;
            let system = system_from_codebook(file.scheme, quantizer, &phi, cfg.k).map_err(run_err)?;
            let row = evaluate_nmse(&system, &phi, &channel, &eval_cfg, exec).map_err(run_err)?;
            eprintln!("eval: {} NMSE {:.4} dB over {} trials", row.scheme, row.nmse_db, row.trials);
            let t = title("eval");
            write_results(dir, &[row], manifest.with_timing, t.as_deref()).map_err(run_err)
        }
        other => Err(usage(Error::InvalidInput(format!("unknown command {other:?} in manifest")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_list_flags() {
        let cli = Cli::try_parse_from([
            "cscovq",
            "sweep-alpha",
            "--alphas",
            "0.4,0.5",
            "--schemes",
            "COVQ-E2E,cuvq-e2e",
            "--seed",
            "9",
        ])
        .unwrap();
        let Command::SweepAlpha { common } = cli.command else { panic!() };
        assert_eq!(common.alphas, Some(vec![0.4, 0.5]));
        assert_eq!(common.schemes, Some(vec![Scheme::CovqE2e, Scheme::CuvqE2e]));
        let cfg = common.resolve(&defaults_with_epsilons(&ALPHA_SWEEP_EPSILONS)).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.epsilons, vec![0.0, 0.01]);
    }

    #[test]
    fn bad_flags_exit_two() {
        assert_eq!(main_with_args(["cscovq", "sweep-epsilon", "--trials", "many"]), 2);
        assert_eq!(main_with_args(["cscovq", "frobnicate"]), 2);
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.json");
        fs::write(&cfg, r#"{"K": 25}"#).unwrap();
        let out = dir.path().join("out");
        assert_eq!(
            main_with_args([
                "cscovq",
                "sweep-epsilon",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap()
            ]),
            2
        );
    }
}
