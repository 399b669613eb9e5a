//! Channel-optimized vector quantizer training.
//!
//! For a fixed codebook `{c_j}` and channel `P(j|i)` the encoder sends
//!
//! ```text
//! i* = argmin_i  a_i − 2 x̃ᵀ b_i,   a_i = Σ_j P(j|i) ‖c_j‖²,   b_i = Σ_j P(j|i) c_j
//! ```
//!
//! which is the expected squared error over the channel minus the `x̃`-only
//! term `‖x̃‖²`. For fixed assignments the codebook update over a training set
//! is the channel-weighted centroid
//!
//! ```text
//! c_j = Σ_i P(j|i) S_i / Σ_i P(j|i) T_i
//! ```
//!
//! with `S_i` the sum and `T_i` the count of samples assigned to `i`. [`train`]
//! alternates the two rules. Each half-step is a conditional minimiser of the
//! surrogate distortion `D̂ = (1/T) Σ_t Σ_j P(j|enc(t)) ‖x̃_t − c_j‖²`, so its
//! history never increases.
//!
//! Everything here is generic in the dimension of the quantized vectors: the
//! end-to-end design trains on OMP outputs in `R^M`, the measurement-space
//! baseline trains on raw measurements in `R^N`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelModel;
use crate::error::{dims, invalid, Result};
use crate::numerics::norm_sq;
use crate::parallel::{map_chunks, Exec, CHUNK_LEN};

/// Cells whose channel-weighted population falls below this are repaired.
pub const EMPTY_CELL_TOL: f64 = 1e-12;

/// `L = 2^B` codevectors of dimension `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    bits: u32,
    dim: usize,
    vectors: Vec<f64>,
}

impl Codebook {
    pub fn new(bits: u32, dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if bits >= usize::BITS {
            return Err(invalid(format!("bit width {bits} too large")));
        }
        let l = 1usize << bits;
        if vectors.len() != l * dim {
            return Err(dims(format!(
                "{} values for {l} codevectors of dimension {dim}",
                vectors.len()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(invalid("codevectors must be finite"));
        }
        Ok(Self { bits, dim, vectors })
    }

    pub fn zeros(bits: u32, dim: usize) -> Self {
        Self { bits, dim, vectors: vec![0.0; (1usize << bits) * dim] }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> usize {
        1 << self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codevector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vectors
    }
}

/// Channel-averaged codebook statistics used by the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderAggregates {
    dim: usize,
    /// `a_i = Σ_j P(j|i) ‖c_j‖²`.
    energy: Vec<f64>,
    /// `b_i = Σ_j P(j|i) c_j`, row-major `L×dim`.
    mean: Vec<f64>,
    /// `b` transposed (`dim×L`) for the encoder inner loop.
    mean_t: Vec<f64>,
}

impl EncoderAggregates {
    pub fn size(&self) -> usize {
        self.energy.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.energy[i]
    }

    pub fn mean_codevector(&self, i: usize) -> &[f64] {
        &self.mean[i * self.dim..(i + 1) * self.dim]
    }

    /// Encoder score `a_i − 2 xᵀ b_i`.
    pub fn score(&self, i: usize, x: &[f64]) -> f64 {
        let b = self.mean_codevector(i);
        self.energy[i] - 2.0 * x.iter().zip(b).map(|(p, q)| p * q).sum::<f64>()
    }

    /// Fills `scores` with every encoder score and returns `(argmin, min)`.
    /// Zero coordinates of `x` are skipped, which makes OMP outputs cheap.
    fn scores_into(&self, x: &[f64], scores: &mut [f64]) -> (usize, f64) {
        let l = self.size();
        scores.copy_from_slice(&self.energy);
        for (m, &xm) in x.iter().enumerate() {
            if xm == 0.0 {
                continue;
            }
            let w = 2.0 * xm;
            for (s, b) in scores.iter_mut().zip(&self.mean_t[m * l..(m + 1) * l]) {
                *s -= w * b;
            }
        }
        let mut best = (0, scores[0]);
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s < best.1 {
                best = (i, s);
            }
        }
        best
    }
}

/// Precomputes `a_i` and `b_i` for every input index.
pub fn compute_aggregates(cb: &Codebook, ch: &ChannelModel) -> Result<EncoderAggregates> {
    let l = cb.size();
    if ch.size() != l {
        return Err(dims(format!("codebook has {l} codevectors, channel alphabet is {}", ch.size())));
    }
    let dim = cb.dim();
    let norms: Vec<f64> = (0..l).map(|j| norm_sq(cb.codevector(j))).collect();
    let mut energy = vec![0.0; l];
    let mut mean = vec![0.0; l * dim];
    for i in 0..l {
        let bi = &mut mean[i * dim..(i + 1) * dim];
        for (j, &p) in ch.row(i).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            energy[i] += p * norms[j];
            for (b, c) in bi.iter_mut().zip(cb.codevector(j)) {
                *b += p * c;
            }
        }
    }
    let mut mean_t = vec![0.0; l * dim];
    for i in 0..l {
        for m in 0..dim {
            mean_t[m * l + i] = mean[i * dim + m];
        }
    }
    Ok(EncoderAggregates { dim, energy, mean, mean_t })
}

/// Channel-aware encoder rule; ties go to the lowest index.
///
/// # Panics
///
/// If `x` does not have the aggregates' dimension.
pub fn encode(agg: &EncoderAggregates, x: &[f64]) -> usize {
    assert_eq!(x.len(), agg.dim(), "vector dimension does not match the codebook");
    let mut scores = vec![0.0; agg.size()];
    agg.scores_into(x, &mut scores).0
}

/// Samples the quantizer is trained on, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    dim: usize,
    data: Vec<f64>,
}

impl TrainingSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("training samples must have positive dimension"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(dims(format!("{} values is not a multiple of dimension {dim}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("training samples must be finite"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(dims("training samples of different dimensions"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sample(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Per-cell sums `S_i` and counts `T_i`.
#[derive(Debug, Clone)]
struct CellStats {
    sums: Vec<f64>,
    counts: Vec<f64>,
}

impl CellStats {
    fn new(l: usize, dim: usize) -> Self {
        Self { sums: vec![0.0; l * dim], counts: vec![0.0; l] }
    }

    fn add(&mut self, i: usize, x: &[f64]) {
        let dim = x.len();
        self.counts[i] += 1.0;
        for (s, v) in self.sums[i * dim..(i + 1) * dim].iter_mut().zip(x) {
            *s += v;
        }
    }

    fn merge(&mut self, other: &CellStats) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Result of encoding the whole training set.
struct EncodePass {
    assignments: Vec<usize>,
    /// Per-sample surrogate distortion `Σ_j P(j|i) ‖x − c_j‖²`.
    distortions: Vec<f64>,
    stats: CellStats,
    mean_distortion: f64,
}

fn encode_pass(exec: Exec, training: &TrainingSet, agg: &EncoderAggregates) -> EncodePass {
    let l = agg.size();
    let dim = training.dim();
    let parts = map_chunks(exec, training.len(), CHUNK_LEN, |_, range| {
        let mut scores = vec![0.0; l];
        let mut stats = CellStats::new(l, dim);
        let mut assignments = Vec::with_capacity(range.len());
        let mut distortions = Vec::with_capacity(range.len());
        let mut total = 0.0;
        for t in range {
            let x = training.sample(t);
            let (i, s) = agg.scores_into(x, &mut scores);
            let d = norm_sq(x) + s;
            stats.add(i, x);
            assignments.push(i);
            distortions.push(d);
            total += d;
        }
        (assignments, distortions, stats, total)
    });
    let mut pass = EncodePass {
        assignments: Vec::with_capacity(training.len()),
        distortions: Vec::with_capacity(training.len()),
        stats: CellStats::new(l, dim),
        mean_distortion: 0.0,
    };
    let mut total = 0.0;
    for (a, d, s, t) in parts {
        pass.assignments.extend(a);
        pass.distortions.extend(d);
        pass.stats.merge(&s);
        total += t;
    }
    pass.mean_distortion = total / training.len() as f64;
    pass
}

fn cell_stats(exec: Exec, training: &TrainingSet, assignments: &[usize], l: usize) -> CellStats {
    let dim = training.dim();
    let parts = map_chunks(exec, training.len(), CHUNK_LEN, |_, range| {
        let mut stats = CellStats::new(l, dim);
        for t in range {
            stats.add(assignments[t], training.sample(t));
        }
        stats
    });
    let mut stats = CellStats::new(l, dim);
    for p in &parts {
        stats.merge(p);
    }
    stats
}

/// Surrogate distortion `D̂` of fixed assignments under the given aggregates.
pub fn surrogate_distortion(
    exec: Exec,
    training: &TrainingSet,
    assignments: &[usize],
    agg: &EncoderAggregates,
) -> Result<f64> {
    check_assignments(training, assignments, agg.size())?;
    if training.dim() != agg.dim() {
        return Err(dims("training and codebook dimensions differ"));
    }
    let parts = map_chunks(exec, training.len(), CHUNK_LEN, |_, range| {
        range
            .map(|t| {
                let x = training.sample(t);
                norm_sq(x) + agg.score(assignments[t], x)
            })
            .sum::<f64>()
    });
    Ok(parts.iter().sum::<f64>() / training.len() as f64)
}

fn check_assignments(training: &TrainingSet, assignments: &[usize], l: usize) -> Result<()> {
    if training.is_empty() {
        return Err(invalid("training set is empty"));
    }
    if assignments.len() != training.len() {
        return Err(dims(format!(
            "{} assignments for {} samples",
            assignments.len(),
            training.len()
        )));
    }
    if let Some(bad) = assignments.iter().find(|&&i| i >= l) {
        return Err(invalid(format!("assignment {bad} out of range for {l} cells")));
    }
    Ok(())
}

/// Outcome of one codebook update.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookUpdate {
    pub codebook: Codebook,
    /// Cells that had no channel-weighted population and were reseeded.
    pub repaired: Vec<usize>,
}

fn rebuild_codebook(
    stats: &CellStats,
    ch: &ChannelModel,
    training: &TrainingSet,
    distortions: impl FnOnce() -> Vec<f64>,
) -> CodebookUpdate {
    let l = ch.size();
    let dim = training.dim();
    let mut vectors = vec![0.0; l * dim];
    let mut empty = Vec::new();
    for j in 0..l {
        let cj = &mut vectors[j * dim..(j + 1) * dim];
        let mut denom = 0.0;
        for i in 0..l {
            let p = ch.prob(i, j);
            if p == 0.0 || stats.counts[i] == 0.0 {
                continue;
            }
            denom += p * stats.counts[i];
            for (c, s) in cj.iter_mut().zip(&stats.sums[i * dim..(i + 1) * dim]) {
                *c += p * s;
            }
        }
        if denom < EMPTY_CELL_TOL {
            empty.push(j);
        } else {
            for c in cj.iter_mut() {
                *c /= denom;
            }
        }
    }
    if !empty.is_empty() {
        // Reseed empty cells with the samples that are currently worst served.
        let d = distortions();
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
        for (&j, &t) in empty.iter().zip(order.iter().cycle()) {
            vectors[j * dim..(j + 1) * dim].copy_from_slice(training.sample(t));
        }
    }
    CodebookUpdate {
        codebook: Codebook { bits: ch.bits(), dim, vectors },
        repaired: empty,
    }
}

/// Channel-weighted centroid update for fixed assignments.
///
/// `current` is the codebook the assignments were made with; it is only used
/// to find replacement samples for empty cells.
pub fn update_codebook(
    assignments: &[usize],
    training: &TrainingSet,
    ch: &ChannelModel,
    current: &Codebook,
) -> Result<CodebookUpdate> {
    let l = ch.size();
    check_assignments(training, assignments, l)?;
    if current.size() != l || current.dim() != training.dim() {
        return Err(dims("current codebook does not match channel and training set"));
    }
    let stats = cell_stats(Exec::Sequential, training, assignments, l);
    Ok(rebuild_codebook(&stats, ch, training, || {
        let agg = compute_aggregates(current, ch).expect("sizes checked");
        training
            .iter()
            .zip(assignments)
            .map(|(x, &i)| norm_sq(x) + agg.score(i, x))
            .collect()
    }))
}

/// Initial codebook.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Codebook(Codebook),
    /// `L` distinct training samples chosen with this seed.
    Seed(u64),
}

/// Stopping rule and scheduling for [`train`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    /// Stop once `(D̂_prev − D̂) / D̂_prev` falls to this value or below.
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Exec,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 200, exec: Exec::Parallel }
    }
}

/// A trained quantizer and its training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedQuantizer {
    pub codebook: Codebook,
    pub aggregates: EncoderAggregates,
    pub channel: ChannelModel,
    /// `D̂` after each codebook update.
    pub history: Vec<f64>,
    /// `D̂` after every half-step: encode, update, encode, update, …
    pub half_steps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Total number of empty-cell repairs.
    pub repairs: usize,
}

impl TrainedQuantizer {
    /// Wraps a fixed codebook without training.
    pub fn from_codebook(codebook: Codebook, channel: ChannelModel) -> Result<Self> {
        let aggregates = compute_aggregates(&codebook, &channel)?;
        Ok(Self {
            codebook,
            aggregates,
            channel,
            history: Vec::new(),
            half_steps: Vec::new(),
            iterations: 0,
            converged: false,
            repairs: 0,
        })
    }

    pub fn encode(&self, x: &[f64]) -> usize {
        encode(&self.aggregates, x)
    }

    pub fn decode(&self, j: usize) -> &[f64] {
        self.codebook.codevector(j)
    }

    /// Largest increase between consecutive half-steps (≤ 0 for a monotone run).
    pub fn max_half_step_increase(&self) -> f64 {
        self.half_steps
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn initial_codebook(training: &TrainingSet, bits: u32, seed: u64) -> Codebook {
    let l = 1usize << bits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, training.len(), l);
    let mut vectors = Vec::with_capacity(l * training.dim());
    for t in picks.iter() {
        vectors.extend_from_slice(training.sample(t));
    }
    Codebook { bits, dim: training.dim(), vectors }
}

/// Alternates the encoder and codebook rules until the relative improvement
/// of `D̂` drops to `params.tol` or `params.max_iter` iterations have run.
pub fn train(training: &TrainingSet, ch: &ChannelModel, init: Init, params: TrainParams) -> Result<TrainedQuantizer> {
    let l = ch.size();
    if training.len() < l {
        return Err(invalid(format!(
            "training set has {} samples, need at least {l}",
            training.len()
        )));
    }
    if params.tol.is_nan() || params.tol <= 0.0 {
        return Err(invalid(format!("tolerance must be positive, got {}", params.tol)));
    }
    let mut codebook = match init {
        Init::Seed(seed) => initial_codebook(training, ch.bits(), seed),
        Init::Codebook(cb) => {
            if cb.size() != l || cb.dim() != training.dim() {
                return Err(dims("initial codebook does not match channel and training set"));
            }
            cb
        }
    };
    let mut aggregates = compute_aggregates(&codebook, ch)?;
    let mut history = Vec::new();
    let mut half_steps = Vec::new();
    let mut repairs = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let pass = encode_pass(params.exec, training, &aggregates);
        half_steps.push(pass.mean_distortion);

        let update = rebuild_codebook(&pass.stats, ch, training, || pass.distortions.clone());
        repairs += update.repaired.len();
        codebook = update.codebook;
        aggregates = compute_aggregates(&codebook, ch)?;
        let d = surrogate_distortion(params.exec, training, &pass.assignments, &aggregates)?;
        half_steps.push(d);

        if let Some(&prev) = history.last() {
            if prev - d <= params.tol * prev {
                history.push(d);
                converged = true;
                break;
            }
        }
        history.push(d);
    }

    Ok(TrainedQuantizer {
        codebook,
        aggregates,
        channel: ch.clone(),
        history,
        half_steps,
        iterations,
        converged,
        repairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bsc_channel;
    use rand::Rng;

    fn bsc(bits: u32, eps: f64) -> ChannelModel {
        bsc_channel(bits, eps).unwrap()
    }

    fn one_dim(bits: u32, values: &[f64]) -> Codebook {
        Codebook::new(bits, 1, values.to_vec()).unwrap()
    }

    fn expected_distortion(cb: &Codebook, ch: &ChannelModel, i: usize, x: &[f64]) -> f64 {
        (0..cb.size())
            .map(|j| ch.prob(i, j) * x.iter().zip(cb.codevector(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum()
    }

    #[test]
    fn aggregates_examples() {
        let cb = one_dim(1, &[0.0, 2.0]);
        let agg = compute_aggregates(&cb, &bsc(1, 0.1)).unwrap();
        assert!((agg.energy(0) - 0.4).abs() < 1e-15);
        assert!((agg.energy(1) - 3.6).abs() < 1e-15);
        assert!((agg.mean_codevector(0)[0] - 0.2).abs() < 1e-15);
        assert!((agg.mean_codevector(1)[0] - 1.8).abs() < 1e-15);

        let agg = compute_aggregates(&cb, &bsc(1, 0.0)).unwrap();
        assert_eq!(agg.energy(1), 4.0);
        assert_eq!(agg.mean_codevector(1), &[2.0]);

        let uniform = ChannelModel::from_matrix(&vec![vec![0.25; 4]; 4]).unwrap();
        let cb = Codebook::new(2, 2, vec![1.0, 0.0, -1.0, 3.0, 0.5, 0.5, 2.0, -2.0]).unwrap();
        let agg = compute_aggregates(&cb, &uniform).unwrap();
        for i in 1..4 {
            assert_eq!(agg.energy(i), agg.energy(0));
            assert_eq!(agg.mean_codevector(i), agg.mean_codevector(0));
        }

        assert!(compute_aggregates(&cb, &bsc(3, 0.1)).is_err());
    }

    #[test]
    fn encode_hand_example() {
        let cb = one_dim(1, &[0.0, 2.0]);
        let agg = compute_aggregates(&cb, &bsc(1, 0.1)).unwrap();
        assert!((agg.score(0, &[0.8]) - 0.08).abs() < 1e-12);
        assert!((agg.score(1, &[0.8]) - 0.72).abs() < 1e-12);
        assert_eq!(encode(&agg, &[0.8]), 0);
    }

    #[test]
    fn noiseless_encode_is_nearest_neighbour() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..16 * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let cb = Codebook::new(4, 3, data).unwrap();
        let agg = compute_aggregates(&cb, &bsc(4, 0.0)).unwrap();
        for _ in 0..500 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let nearest = (0..16)
                .min_by(|&a, &b| {
                    crate::numerics::dist_sq(&x, cb.codevector(a)).total_cmp(&crate::numerics::dist_sq(&x, cb.codevector(b)))
                })
                .unwrap();
            assert_eq!(encode(&agg, &x), nearest);
        }
    }

    #[test]
    fn encode_breaks_ties_low() {
        let cb = one_dim(1, &[1.0, 1.0]);
        let agg = compute_aggregates(&cb, &bsc(1, 0.2)).unwrap();
        assert_eq!(encode(&agg, &[0.3]), 0);
    }

    #[test]
    fn encode_matches_expected_distortion_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let bits = rng.random_range(1..=3);
            let dim = rng.random_range(1..=4);
            let l = 1 << bits;
            let cb = Codebook::new(bits, dim, (0..l * dim).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let ch = bsc(bits, rng.random_range(0.0..0.5));
            let agg = compute_aggregates(&cb, &ch).unwrap();
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let d: Vec<f64> = (0..l).map(|i| expected_distortion(&cb, &ch, i, &x)).collect();
            let i = encode(&agg, &x);
            let best = d.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(d[i] <= best + 1e-12);
            // The two objectives differ by exactly ‖x‖².
            for (k, dk) in d.iter().enumerate() {
                assert!((agg.score(k, &x) + norm_sq(&x) - dk).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn update_hand_example() {
        let training = TrainingSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let cur = one_dim(1, &[0.0, 1.0]);
        let up = update_codebook(&[0, 1], &training, &bsc(1, 0.1), &cur).unwrap();
        assert!((up.codebook.codevector(0)[0] - 0.1).abs() < 1e-15);
        assert!((up.codebook.codevector(1)[0] - 0.9).abs() < 1e-15);
        assert!(up.repaired.is_empty());
    }

    #[test]
    fn update_fully_noisy_channel_gives_global_mean() {
        let training = TrainingSet::from_rows(&[vec![0.0], vec![1.0], vec![5.0]]).unwrap();
        let cur = one_dim(1, &[0.0, 1.0]);
        let up = update_codebook(&[0, 1, 1], &training, &bsc(1, 0.5), &cur).unwrap();
        assert!((up.codebook.codevector(0)[0] - 2.0).abs() < 1e-15);
        assert!((up.codebook.codevector(1)[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn update_single_cell_and_repair() {
        let rows = vec![vec![1.0, 0.0], vec![3.0, 0.0], vec![2.0, 6.0], vec![2.0, 2.0]];
        let training = TrainingSet::from_rows(&rows).unwrap();
        let cur = Codebook::zeros(2, 2);
        let up = update_codebook(&[3, 3, 3, 3], &training, &bsc(2, 0.0), &cur).unwrap();
        assert_eq!(up.codebook.codevector(3), &[2.0, 2.0]);
        assert_eq!(up.repaired, vec![0, 1, 2]);
        // Repairs take the worst-served samples first: (2,6), then (3,0), then (2,2).
        assert_eq!(up.codebook.codevector(0), &[2.0, 6.0]);
        assert_eq!(up.codebook.codevector(1), &[3.0, 0.0]);
        assert_eq!(up.codebook.codevector(2), &[2.0, 2.0]);
    }

    #[test]
    fn update_rejects_bad_input() {
        let training = TrainingSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let cur = one_dim(1, &[0.0, 1.0]);
        assert!(update_codebook(&[0], &training, &bsc(1, 0.1), &cur).is_err());
        assert!(update_codebook(&[0, 2], &training, &bsc(1, 0.1), &cur).is_err());
        let empty = TrainingSet::new(1, vec![]).unwrap();
        assert!(update_codebook(&[], &empty, &bsc(1, 0.1), &cur).is_err());
    }

    #[test]
    fn lloyd_toy_converges_to_pair_means() {
        let training = TrainingSet::from_rows(&[vec![0.0], vec![1.0], vec![4.0], vec![5.0]]).unwrap();
        for seed in 0..20 {
            let q = train(&training, &bsc(1, 0.0), Init::Seed(seed), TrainParams::default()).unwrap();
            let mut c = vec![q.codebook.codevector(0)[0], q.codebook.codevector(1)[0]];
            c.sort_by(f64::total_cmp);
            assert_eq!(c, vec![0.5, 4.5], "seed {seed}");
            assert!(q.converged);
        }
    }

    #[test]
    fn training_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..600).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let training = TrainingSet::from_rows(&rows).unwrap();
        for eps in [0.0, 0.01, 0.1, 0.3] {
            let q = train(&training, &bsc(4, eps), Init::Seed(1), TrainParams::default()).unwrap();
            assert!(q.max_half_step_increase() <= 1e-10, "eps {eps}");
            assert_eq!(q.half_steps.len(), 2 * q.iterations);
        }
    }

    #[test]
    fn train_validates_input() {
        let training = TrainingSet::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(train(&training, &bsc(2, 0.0), Init::Seed(0), TrainParams::default()).is_err());
        let params = TrainParams { tol: 0.0, ..Default::default() };
        assert!(train(&training, &bsc(1, 0.0), Init::Seed(0), params).is_err());
        let wrong = Codebook::zeros(1, 2);
        assert!(train(&training, &bsc(1, 0.0), Init::Codebook(wrong), TrainParams::default()).is_err());
    }

    #[test]
    fn sequential_and_parallel_training_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let rows: Vec<Vec<f64>> = (0..5000).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let training = TrainingSet::from_rows(&rows).unwrap();
        let ch = bsc(5, 0.02);
        let seq = train(&training, &ch, Init::Seed(2), TrainParams { exec: Exec::Sequential, ..Default::default() }).unwrap();
        let par = train(&training, &ch, Init::Seed(2), TrainParams { exec: Exec::Parallel, ..Default::default() }).unwrap();
        assert_eq!(seq, par);
    }
}
