//! Monte Carlo NMSE evaluation and the experiment sweeps.
//!
//! Randomness is split into independent streams of the master seed (sensing
//! matrix, training draws, codebook initialisation, evaluation draws, channel
//! flips, measurement noise). Training and evaluation never share draws, and
//! every scheme evaluated at one operating point sees the same sources and the
//! same channel stream.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{covq_q_finalize, covq_q_train, cuvq_train, decode_table, MeasurementQuantizer};
use crate::channel::{bsc_channel, ChannelModel};
use crate::covq::{train, Init, TrainParams, TrainedQuantizer, TrainingSet};
use crate::error::{dims, invalid, Error, Result};
use crate::numerics::dist_sq;
use crate::parallel::{map_chunks, Exec, CHUNK_LEN};
use crate::reconstruction::omp_reconstruct;
use crate::rng::{stream_rng, Stream};
use crate::sparse_source::{generate_sensing_matrix, generate_sparse_vector, measure_into, SensingMatrix};

/// Quantizer design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Channel-optimized, end-to-end distortion.
    #[serde(rename = "COVQ-E2E", alias = "covq-e2e")]
    CovqE2e,
    /// Channel-optimized, measurement-space distortion, OMP at the decoder.
    #[serde(rename = "COVQ-Q", alias = "covq-q")]
    CovqQ,
    /// Channel-unaware, end-to-end distortion.
    #[serde(rename = "CUVQ-E2E", alias = "cuvq-e2e")]
    CuvqE2e,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::CovqE2e, Scheme::CovqQ, Scheme::CuvqE2e];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::CovqE2e => "COVQ-E2E",
            Scheme::CovqQ => "COVQ-Q",
            Scheme::CuvqE2e => "CUVQ-E2E",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "covqe2e" => Ok(Scheme::CovqE2e),
            "covqq" => Ok(Scheme::CovqQ),
            "cuvqe2e" => Ok(Scheme::CuvqE2e),
            _ => Err(Error::Parse(format!("unknown scheme {s:?} (expected COVQ-E2E, COVQ-Q or CUVQ-E2E)"))),
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "B")]
    pub bits: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub epsilons: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub training_size: usize,
    pub seed: u64,
    pub noise_std: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub redraw_phi: bool,
    /// Measurement rates of the α sweep.
    pub alphas: Vec<f64>,
    /// Bit widths of the rate sweep.
    pub rates: Vec<u32>,
    /// Independent repetitions (seed, seed + 1, …) averaged in the linear domain.
    pub seeds: usize,
}

pub const EPSILON_GRID: [f64; 6] = [0.0, 0.001, 0.005, 0.01, 0.05, 0.1];
pub const ALPHA_SWEEP_EPSILONS: [f64; 2] = [0.0, 0.01];
pub const RATE_SWEEP_EPSILONS: [f64; 2] = [0.0, 0.005];
pub const DEFAULT_ALPHAS: [f64; 8] = [0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7];
pub const DEFAULT_RATES: [u32; 5] = [2, 4, 6, 8, 10];

/// Number of measurements for a rate `alpha`: `round(αM)`.
pub fn measurements_for(alpha: f64, m: usize) -> usize {
    (alpha * m as f64).round() as usize
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 20,
            k: 2,
            bits: 8,
            n: 10,
            alpha: 0.5,
            epsilons: EPSILON_GRID.to_vec(),
            schemes: Scheme::ALL.to_vec(),
            trials: 100_000,
            training_size: 100_000,
            seed: 1,
            noise_std: 0.0,
            tol: 1e-6,
            max_iter: 200,
            redraw_phi: false,
            alphas: DEFAULT_ALPHAS.to_vec(),
            rates: DEFAULT_RATES.to_vec(),
            seeds: 1,
        }
    }
}

impl ExperimentConfig {
    /// Checks the cross-field constraints (`K < N < M`, ranges of ε and the sweep lists).
    pub fn validate(&self) -> Result<()> {
        check_dims(self.m, self.n, self.k)?;
        if !(1..=crate::channel::MAX_BITS).contains(&self.bits) {
            return Err(invalid(format!("B must be in 1..={}, got {}", crate::channel::MAX_BITS, self.bits)));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.seeds == 0 {
            return Err(invalid("seeds must be at least 1"));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(0.0..=0.5).contains(*e)) {
            return Err(invalid(format!("epsilon {e} outside [0, 0.5]")));
        }
        if self.schemes.is_empty() {
            return Err(invalid("no schemes selected"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(invalid("noise_std must be finite and >= 0"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(invalid("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        for &a in &self.alphas {
            check_dims(self.m, measurements_for(a, self.m), self.k)
                .map_err(|e| invalid(format!("alpha {a}: {e}")))?;
        }
        if let Some(b) = self.rates.iter().find(|b| !(1..=crate::channel::MAX_BITS).contains(*b)) {
            return Err(invalid(format!("rate {b} outside 1..={}", crate::channel::MAX_BITS)));
        }
        check_training_size(self.training_size, self.bits)
    }

    /// Extra checks for a rate sweep: every swept `B` needs `T ≥ 2^B`.
    pub fn validate_rates(&self) -> Result<()> {
        self.validate()?;
        if self.rates.is_empty() {
            return Err(invalid("no rates selected"));
        }
        self.rates.iter().try_for_each(|&b| check_training_size(self.training_size, b))
    }

    pub fn train_params(&self, exec: Exec) -> TrainParams {
        TrainParams { tol: self.tol, max_iter: self.max_iter, exec }
    }

    /// The same experiment at a different number of measurements.
    pub fn with_measurements(&self, n: usize) -> Self {
        Self { n, alpha: n as f64 / self.m as f64, ..self.clone() }
    }
}

fn check_training_size(t: usize, bits: u32) -> Result<()> {
    if t < 1 << bits {
        return Err(invalid(format!("training_size {t} below codebook size {}", 1usize << bits)));
    }
    Ok(())
}

fn check_dims(m: usize, n: usize, k: usize) -> Result<()> {
    if !(k < n && n < m) {
        return Err(invalid(format!("need K < N < M, got K={k}, N={n}, M={m}")));
    }
    Ok(())
}

/// A trained system ready to be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedSystem {
    /// COVQ-E2E or CUVQ-E2E: encode the OMP estimate, decode by table lookup.
    EndToEnd { scheme: Scheme, quantizer: TrainedQuantizer },
    /// COVQ-Q: encode the measurement, decode with OMP on the received codevector.
    Measurement(MeasurementQuantizer),
}

impl TrainedSystem {
    pub fn scheme(&self) -> Scheme {
        match self {
            TrainedSystem::EndToEnd { scheme, .. } => *scheme,
            TrainedSystem::Measurement(_) => Scheme::CovqQ,
        }
    }

    pub fn bits(&self) -> u32 {
        match self {
            TrainedSystem::EndToEnd { quantizer, .. } => quantizer.codebook.bits(),
            TrainedSystem::Measurement(q) => q.quantizer.codebook.bits(),
        }
    }

    pub fn trained(&self) -> &TrainedQuantizer {
        match self {
            TrainedSystem::EndToEnd { quantizer, .. } => quantizer,
            TrainedSystem::Measurement(q) => &q.quantizer,
        }
    }
}

/// Streams for the training phase use indexes below this, evaluation above.
const EVAL_PHASE: u64 = 1 << 40;

/// OMP estimates and the raw measurements they came from, drawn from the training stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub estimates: TrainingSet,
    pub measurements: TrainingSet,
}

/// Draws `size` sources, measures them and runs OMP on each measurement.
pub fn build_training_data(
    phi: &SensingMatrix,
    cfg: &ExperimentConfig,
    exec: Exec,
) -> Result<TrainingData> {
    let (m, n, k) = (phi.dimension(), phi.measurements(), cfg.k);
    let parts = map_chunks(exec, cfg.training_size, CHUNK_LEN, |c, range| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut src = stream_rng(cfg.seed, Stream::Training, c as u64);
        let mut noise = stream_rng(cfg.seed, Stream::Noise, c as u64);
        let mut phis = stream_rng(cfg.seed, Stream::PhiTrials, c as u64);
        let mut est = Vec::with_capacity(range.len() * m);
        let mut ys = Vec::with_capacity(range.len() * n);
        let mut y = vec![0.0; n];
        for _ in range {
            let x = generate_sparse_vector(&mut src, m, k)?;
            let fresh;
            let phi_t = if cfg.redraw_phi {
                fresh = generate_sensing_matrix(&mut phis, n, m)?;
                &fresh
            } else {
                phi
            };
            measure_into(phi_t, &x, cfg.noise_std, &mut noise, &mut y)?;
            est.extend(omp_reconstruct(phi_t, &y, k)?.estimate);
            ys.extend_from_slice(&y);
        }
        Ok((est, ys))
    });
    let mut est = Vec::with_capacity(cfg.training_size * m);
    let mut ys = Vec::with_capacity(cfg.training_size * n);
    for p in parts {
        let (e, y) = p?;
        est.extend(e);
        ys.extend(y);
    }
    Ok(TrainingData {
        estimates: TrainingSet::new(m, est)?,
        measurements: TrainingSet::new(n, ys)?,
    })
}

/// The fixed sensing matrix of an experiment with `n` measurements.
pub fn experiment_phi(cfg: &ExperimentConfig, n: usize) -> Result<SensingMatrix> {
    generate_sensing_matrix(&mut stream_rng(cfg.seed, Stream::Phi, n as u64), n, cfg.m)
}

/// Seed used to initialise every codebook of `bits` bits in an experiment.
pub fn init_seed(seed: u64, bits: u32) -> u64 {
    stream_rng(seed, Stream::Init, bits as u64).random()
}

/// Linear-domain NMSE estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmseEstimate {
    /// Mean of `‖x − x̂‖² / K`.
    pub mean: f64,
    /// Standard error of `mean`.
    pub std_err: f64,
    pub trials: usize,
}

impl NmseEstimate {
    pub fn db(&self) -> f64 {
        10.0 * self.mean.log10()
    }

    /// Standard error propagated to the dB scale.
    pub fn std_err_db(&self) -> f64 {
        10.0 / std::f64::consts::LN_10 * self.std_err / self.mean
    }
}

/// Runs `trials` end-to-end transmissions through `system` over `channel`.
///
/// Each trial draws `x`, measures `y = Φx (+ w)`, encodes (OMP first for the
/// end-to-end schemes), sends the index through the channel and decodes.
pub fn estimate_nmse(
    system: &TrainedSystem,
    phi: &SensingMatrix,
    channel: &ChannelModel,
    cfg: &ExperimentConfig,
    exec: Exec,
) -> Result<NmseEstimate> {
    let (m, n, k) = (phi.dimension(), phi.measurements(), cfg.k);
    if m != cfg.m {
        return Err(dims(format!("sensing matrix has {m} columns, config says M={}", cfg.m)));
    }
    if channel.bits() != system.bits() {
        return Err(dims(format!(
            "channel has {} bits, quantizer has {}",
            channel.bits(),
            system.bits()
        )));
    }
    match system {
        TrainedSystem::EndToEnd { quantizer, .. } if quantizer.codebook.dim() != m => {
            return Err(dims("end-to-end codebook dimension differs from M"));
        }
        TrainedSystem::Measurement(q) if q.quantizer.codebook.dim() != n || q.decoded.dim() != m => {
            return Err(dims("measurement codebook dimension differs from N"));
        }
        _ => {}
    }
    if k == 0 {
        return Err(invalid("sparsity must be positive to normalise the MSE"));
    }
    let parts = map_chunks(exec, cfg.trials, CHUNK_LEN, |c, range| -> Result<(f64, f64)> {
        let idx = EVAL_PHASE | c as u64;
        let mut src = stream_rng(cfg.seed, Stream::Eval, c as u64);
        let mut chan: ChaCha8Rng = stream_rng(cfg.seed, Stream::Channel, c as u64);
        let mut noise = stream_rng(cfg.seed, Stream::Noise, idx);
        let mut phis = stream_rng(cfg.seed, Stream::PhiTrials, idx);
        let mut y = vec![0.0; n];
        let mut x_dense = vec![0.0; m];
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in range {
            let x = generate_sparse_vector(&mut src, m, k)?;
            let fresh;
            let phi_t = if cfg.redraw_phi {
                fresh = generate_sensing_matrix(&mut phis, n, m)?;
                &fresh
            } else {
                phi
            };
            measure_into(phi_t, &x, cfg.noise_std, &mut noise, &mut y)?;
            x.write_dense(&mut x_dense);
            let err = match system {
                TrainedSystem::EndToEnd { quantizer, .. } => {
                    let est = omp_reconstruct(phi_t, &y, k)?;
                    let i = quantizer.encode(&est.estimate);
                    let j = channel.transmit(i, &mut chan)?;
                    dist_sq(&x_dense, quantizer.decode(j))
                }
                TrainedSystem::Measurement(q) => {
                    let i = q.encode(&y);
                    let j = channel.transmit(i, &mut chan)?;
                    if cfg.redraw_phi {
                        let g = q.quantizer.decode(j);
                        dist_sq(&x_dense, &omp_reconstruct(phi_t, g, k)?.estimate)
                    } else {
                        dist_sq(&x_dense, q.decode(j))
                    }
                }
            } / k as f64;
            sum += err;
            sum_sq += err * err;
        }
        Ok((sum, sum_sq))
    });
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for p in parts {
        let (s, q) = p?;
        sum += s;
        sum_sq += q;
    }
    let t = cfg.trials as f64;
    let mean = sum / t;
    let var = if cfg.trials > 1 { ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0) } else { 0.0 };
    Ok(NmseEstimate { mean, std_err: (var / t).sqrt(), trials: cfg.trials })
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "B")]
    pub bits: u32,
    /// Evaluation cross-over probability; empty for a non-BSC channel.
    pub epsilon: Option<f64>,
    pub alpha: f64,
    pub trials: usize,
    pub nmse_db: f64,
    pub seed: u64,
    pub wall_s: Option<f64>,
}

/// Evaluates `system` and packages the result as a CSV row.
pub fn evaluate_nmse(
    system: &TrainedSystem,
    phi: &SensingMatrix,
    channel: &ChannelModel,
    cfg: &ExperimentConfig,
    exec: Exec,
) -> Result<ResultRow> {
    let start = Instant::now();
    let est = estimate_nmse(system, phi, channel, cfg, exec)?;
    let nmse_db = est.db();
    if !nmse_db.is_finite() {
        return Err(invalid(format!("non-finite NMSE for {}", system.scheme())));
    }
    Ok(ResultRow {
        scheme: system.scheme(),
        m: phi.dimension(),
        n: phi.measurements(),
        k: cfg.k,
        bits: system.bits(),
        epsilon: channel.crossover(),
        alpha: phi.rate(),
        trials: cfg.trials,
        nmse_db,
        seed: cfg.seed,
        wall_s: Some(start.elapsed().as_secs_f64()),
    })
}

pub const CSV_HEADER: &str = "scheme,M,N,K,B,epsilon,alpha,trials,nmse_db,seed,wall_s";

/// Writes rows as CSV. Wall times are only written when `with_timing` is set,
/// so that untimed output is a pure function of the configuration.
pub fn write_csv<W: Write>(rows: &[ResultRow], with_timing: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))
        .map_err(|e| Error::Io(e.into()))?;
    for r in rows {
        let wall = match (with_timing, r.wall_s) {
            (true, Some(t)) => t.to_string(),
            _ => String::new(),
        };
        w.write_record([
            r.scheme.label().to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.bits.to_string(),
            r.epsilon.map(|e| e.to_string()).unwrap_or_default(),
            r.alpha.to_string(),
            r.trials.to_string(),
            r.nmse_db.to_string(),
            r.seed.to_string(),
            wall,
        ])
        .map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses CSV produced by [`write_csv`].
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {:?}", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec.map_err(|e: csv::Error| Error::Parse(e.to_string()))?);
    }
    Ok(rows)
}

/// Diagnostics of one training run inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub scheme: Scheme,
    pub n: usize,
    pub bits: u32,
    /// Cross-over probability the quantizer was designed for.
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub half_steps: Vec<f64>,
}

impl TrainingRecord {
    fn new(scheme: Scheme, n: usize, epsilon: f64, q: &TrainedQuantizer) -> Self {
        Self {
            scheme,
            n,
            bits: q.codebook.bits(),
            epsilon,
            iterations: q.iterations,
            converged: q.converged,
            half_steps: q.half_steps.clone(),
        }
    }

    /// Largest increase between consecutive half-steps.
    pub fn max_increase(&self) -> f64 {
        self.half_steps.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Rows and training diagnostics of a sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<ResultRow>,
    pub trainings: Vec<TrainingRecord>,
}

impl SweepReport {
    pub fn find(&self, scheme: Scheme, n: usize, bits: u32, epsilon: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.n == n && r.bits == bits && r.epsilon == Some(epsilon))
    }
}

/// Trains every selected scheme at one `(N, B)` point and evaluates it at each ε.
///
/// COVQ-E2E and COVQ-Q are redesigned for each ε; CUVQ-E2E is designed once
/// for the error-free channel and reused.
fn run_point(
    cfg: &ExperimentConfig,
    phi: &SensingMatrix,
    data: &TrainingData,
    bits: u32,
    epsilons: &[f64],
    exec: Exec,
    report: &mut SweepReport,
) -> Result<()> {
    let n = phi.measurements();
    let params = cfg.train_params(exec);
    let init = init_seed(cfg.seed, bits);
    let cuvq = if cfg.schemes.contains(&Scheme::CuvqE2e) {
        let start = Instant::now();
        let q = cuvq_train(&data.estimates, bits, Init::Seed(init), params)?;
        report.trainings.push(TrainingRecord::new(Scheme::CuvqE2e, n, 0.0, &q));
        Some((TrainedSystem::EndToEnd { scheme: Scheme::CuvqE2e, quantizer: q }, start.elapsed().as_secs_f64()))
    } else {
        None
    };
    for &eps in epsilons {
        let ch = bsc_channel(bits, eps)?;
        for &scheme in &cfg.schemes {
            let start = Instant::now();
            let mut train_time = 0.0;
            let trained;
            let system = match scheme {
                Scheme::CovqE2e => {
                    let q = train(&data.estimates, &ch, Init::Seed(init), params)?;
                    report.trainings.push(TrainingRecord::new(scheme, n, eps, &q));
                    trained = TrainedSystem::EndToEnd { scheme, quantizer: q };
                    &trained
                }
                Scheme::CovqQ => {
                    let q = covq_q_train(&data.measurements, &ch, Init::Seed(init), params)?;
                    report.trainings.push(TrainingRecord::new(scheme, n, eps, &q));
                    trained = TrainedSystem::Measurement(covq_q_finalize(q, phi, cfg.k)?);
                    &trained
                }
                Scheme::CuvqE2e => {
                    let (sys, t) = cuvq.as_ref().expect("trained above");
                    train_time = *t;
                    sys
                }
            };
            let mut row = evaluate_nmse(system, phi, &ch, cfg, exec)?;
            row.wall_s = Some(start.elapsed().as_secs_f64() + train_time);
            report.rows.push(row);
        }
    }
    Ok(())
}

fn single_epsilon_sweep(cfg: &ExperimentConfig, exec: Exec) -> Result<SweepReport> {
    let phi = experiment_phi(cfg, cfg.n)?;
    let data = build_training_data(&phi, cfg, exec)?;
    let mut report = SweepReport::default();
    run_point(cfg, &phi, &data, cfg.bits, &cfg.epsilons, exec, &mut report)?;
    Ok(report)
}

fn single_alpha_sweep(cfg: &ExperimentConfig, exec: Exec) -> Result<SweepReport> {
    let mut report = SweepReport::default();
    for &alpha in &cfg.alphas {
        let point = cfg.with_measurements(measurements_for(alpha, cfg.m));
        let phi = experiment_phi(&point, point.n)?;
        let data = build_training_data(&phi, &point, exec)?;
        run_point(&point, &phi, &data, point.bits, &point.epsilons, exec, &mut report)?;
    }
    Ok(report)
}

fn single_rate_sweep(cfg: &ExperimentConfig, exec: Exec) -> Result<SweepReport> {
    let phi = experiment_phi(cfg, cfg.n)?;
    let data = build_training_data(&phi, cfg, exec)?;
    let mut report = SweepReport::default();
    for &bits in &cfg.rates {
        let point = ExperimentConfig { bits, ..cfg.clone() };
        run_point(&point, &phi, &data, bits, &point.epsilons, exec, &mut report)?;
    }
    Ok(report)
}

/// Runs `sweep` for seeds `seed, seed + 1, …` and averages NMSE in the linear domain.
fn averaged(
    cfg: &ExperimentConfig,
    exec: Exec,
    sweep: fn(&ExperimentConfig, Exec) -> Result<SweepReport>,
) -> Result<SweepReport> {
    cfg.validate()?;
    let mut base = sweep(cfg, exec)?;
    if cfg.seeds == 1 {
        return Ok(base);
    }
    let mut linear: Vec<f64> = base.rows.iter().map(|r| 10f64.powf(r.nmse_db / 10.0)).collect();
    for s in 1..cfg.seeds {
        let other = ExperimentConfig { seed: cfg.seed.wrapping_add(s as u64), ..cfg.clone() };
        let rep = sweep(&other, exec)?;
        for ((acc, row), base_row) in linear.iter_mut().zip(&rep.rows).zip(base.rows.iter_mut()) {
            *acc += 10f64.powf(row.nmse_db / 10.0);
            if let (Some(a), Some(b)) = (base_row.wall_s.as_mut(), row.wall_s) {
                *a += b;
            }
        }
        base.trainings.extend(rep.trainings);
    }
    for (row, acc) in base.rows.iter_mut().zip(linear) {
        row.nmse_db = 10.0 * (acc / cfg.seeds as f64).log10();
    }
    Ok(base)
}

/// NMSE versus cross-over probability at the configured `(M, N, K, B)`.
pub fn run_epsilon_sweep(cfg: &ExperimentConfig, exec: Exec) -> Result<SweepReport> {
    averaged(cfg, exec, single_epsilon_sweep)
}

/// NMSE versus measurement rate: a fresh Φ and training set per α.
pub fn run_alpha_sweep(cfg: &ExperimentConfig, exec: Exec) -> Result<SweepReport> {
    averaged(cfg, exec, single_alpha_sweep)
}

/// NMSE versus bit width `B` at the configured α.
pub fn run_rate_sweep(cfg: &ExperimentConfig, exec: Exec) -> Result<SweepReport> {
    cfg.validate_rates()?;
    averaged(cfg, exec, single_rate_sweep)
}

/// Rebuilds an evaluable system from a codebook trained on `phi`.
pub fn system_from_codebook(
    scheme: Scheme,
    quantizer: TrainedQuantizer,
    phi: &SensingMatrix,
    k: usize,
) -> Result<TrainedSystem> {
    Ok(match scheme {
        Scheme::CovqQ => {
            let decoded = decode_table(&quantizer.codebook, phi, k)?;
            TrainedSystem::Measurement(MeasurementQuantizer { quantizer, decoded, sparsity: k })
        }
        _ => TrainedSystem::EndToEnd { scheme, quantizer },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covq::Codebook;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            bits: 4,
            trials: 3000,
            training_size: 3000,
            max_iter: 30,
            epsilons: vec![0.0, 0.05],
            ..Default::default()
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.label().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("covq_q".parse::<Scheme>().unwrap(), Scheme::CovqQ);
        assert!("vq".parse::<Scheme>().is_err());
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(measurements_for(0.3, 20), 6);
        assert_eq!(measurements_for(0.35, 20), 7);
        let bad = ExperimentConfig { k: 25, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_decoder_gives_zero_db() {
        let cfg = ExperimentConfig { trials: 100_000, ..small_cfg() };
        let phi = experiment_phi(&cfg, cfg.n).unwrap();
        let ch = bsc_channel(4, 0.1).unwrap();
        let q = TrainedQuantizer::from_codebook(Codebook::zeros(4, 20), ch.clone()).unwrap();
        let sys = TrainedSystem::EndToEnd { scheme: Scheme::CovqE2e, quantizer: q };
        let row = evaluate_nmse(&sys, &phi, &ch, &cfg, Exec::Parallel).unwrap();
        assert!(row.nmse_db.abs() < 0.1, "{}", row.nmse_db);
    }

    #[test]
    fn evaluation_is_reproducible_and_schedule_independent() {
        let cfg = small_cfg();
        let a = run_epsilon_sweep(&cfg, Exec::Sequential).unwrap();
        let b = run_epsilon_sweep(&cfg, Exec::Parallel).unwrap();
        let strip = |r: &SweepReport| r.rows.iter().map(|r| (r.scheme, r.epsilon, r.nmse_db)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.rows.len(), 6);
        let e2e = a.find(Scheme::CovqE2e, 10, 4, 0.0).unwrap();
        let cuvq = a.find(Scheme::CuvqE2e, 10, 4, 0.0).unwrap();
        assert_eq!(e2e.nmse_db, cuvq.nmse_db);
    }

    #[test]
    fn csv_round_trip() {
        let cfg = small_cfg();
        let rows = run_epsilon_sweep(&cfg, Exec::Parallel).unwrap().rows;
        let mut buf = Vec::new();
        write_csv(&rows, false, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.nmse_db, b.nmse_db);
            assert_eq!(a.epsilon, b.epsilon);
            assert_eq!(a.wall_s, None);
        }
    }

    #[test]
    fn rejects_mismatched_channel() {
        let cfg = small_cfg();
        let phi = experiment_phi(&cfg, cfg.n).unwrap();
        let q = TrainedQuantizer::from_codebook(Codebook::zeros(4, 20), bsc_channel(4, 0.0).unwrap()).unwrap();
        let sys = TrainedSystem::EndToEnd { scheme: Scheme::CovqE2e, quantizer: q };
        assert!(evaluate_nmse(&sys, &phi, &bsc_channel(3, 0.0).unwrap(), &cfg, Exec::Parallel).is_err());
    }
}
