//! The two comparison designs.
//!
//! - COVQ-Q: a channel-optimized quantizer of the raw measurement `y ∈ R^N`
//!   minimising the quantization distortion `Σ_j P(j|i) ‖y − g_j‖²`. The
//!   decoder runs OMP on the received codevector `g_j`.
//! - CUVQ-E2E: the end-to-end design trained for an error-free channel and
//!   then used unchanged over a noisy one.

use crate::channel::ChannelModel;
use crate::covq::{train, Codebook, Init, TrainParams, TrainedQuantizer, TrainingSet};
use crate::error::{dims, Result};
use crate::reconstruction::omp_reconstruct;
use crate::sparse_source::SensingMatrix;

/// A measurement-space quantizer together with its decoded codebook `ĉ_j = OMP(g_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementQuantizer {
    pub quantizer: TrainedQuantizer,
    /// OMP applied to each `g_j`, `L` vectors in `R^M`.
    pub decoded: Codebook,
    pub sparsity: usize,
}

impl MeasurementQuantizer {
    pub fn encode(&self, y: &[f64]) -> usize {
        self.quantizer.encode(y)
    }

    pub fn decode(&self, j: usize) -> &[f64] {
        self.decoded.codevector(j)
    }
}

/// Trains the measurement-space codebook `{g_j}` on raw measurements.
pub fn covq_q_train(
    measurements: &TrainingSet,
    ch: &ChannelModel,
    init: Init,
    params: TrainParams,
) -> Result<TrainedQuantizer> {
    train(measurements, ch, init, params)
}

/// Precomputes the decoder table by running OMP on every codevector.
pub fn covq_q_finalize(quantizer: TrainedQuantizer, phi: &SensingMatrix, k: usize) -> Result<MeasurementQuantizer> {
    let decoded = decode_table(&quantizer.codebook, phi, k)?;
    Ok(MeasurementQuantizer { quantizer, decoded, sparsity: k })
}

pub(crate) fn decode_table(codebook: &Codebook, phi: &SensingMatrix, k: usize) -> Result<Codebook> {
    if codebook.dim() != phi.measurements() {
        return Err(dims(format!(
            "codebook dimension {} differs from measurement count {}",
            codebook.dim(),
            phi.measurements()
        )));
    }
    let mut values = Vec::with_capacity(codebook.size() * phi.dimension());
    for j in 0..codebook.size() {
        values.extend(omp_reconstruct(phi, codebook.codevector(j), k)?.estimate);
    }
    Codebook::new(codebook.bits(), phi.dimension(), values)
}

/// End-to-end design that ignores the channel: [`train`] over the identity channel.
pub fn cuvq_train(training: &TrainingSet, bits: u32, init: Init, params: TrainParams) -> Result<TrainedQuantizer> {
    train(training, &ChannelModel::identity(bits)?, init, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bsc_channel;
    use crate::covq::encode;
    use crate::numerics::dist_sq;
    use crate::sparse_source::generate_sensing_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn covq_q_toy_converges() {
        let ys = TrainingSet::from_rows(&[vec![0.0], vec![1.0], vec![4.0], vec![5.0]]).unwrap();
        let q = covq_q_train(&ys, &bsc_channel(1, 0.0).unwrap(), Init::Seed(3), TrainParams::default()).unwrap();
        let mut g = vec![q.codebook.codevector(0)[0], q.codebook.codevector(1)[0]];
        g.sort_by(f64::total_cmp);
        assert_eq!(g, vec![0.5, 4.5]);
        assert!(q.max_half_step_increase() <= 1e-10);
    }

    #[test]
    fn covq_q_encode_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..400).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ys = TrainingSet::from_rows(&rows).unwrap();
        let ch = bsc_channel(3, 0.05).unwrap();
        let q = covq_q_train(&ys, &ch, Init::Seed(1), TrainParams::default()).unwrap();
        for y in ys.iter().take(200) {
            let cost = |i: usize| -> f64 { (0..8).map(|j| ch.prob(i, j) * dist_sq(y, q.codebook.codevector(j))).sum() };
            let i = encode(&q.aggregates, y);
            let best = (0..8).map(cost).fold(f64::INFINITY, f64::min);
            assert!(cost(i) <= best + 1e-12);
        }
    }

    #[test]
    fn finalize_decodes_codevectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let phi = generate_sensing_matrix(&mut rng, 6, 12).unwrap();
        let mut values = vec![0.0; 6]; // g_0 = 0
        values.extend(phi.matrix().column(4)); // g_1 = column 4
        let cb = Codebook::new(1, 6, values).unwrap();
        let q = TrainedQuantizer::from_codebook(cb, bsc_channel(1, 0.0).unwrap()).unwrap();
        let mq = covq_q_finalize(q, &phi, 2).unwrap();
        assert_eq!(mq.decoded.size(), 2);
        assert_eq!(mq.decoded.dim(), 12);
        assert_eq!(mq.decode(0), &[0.0; 12]);
        let d1 = mq.decode(1);
        for (m, v) in d1.iter().enumerate() {
            let e = if m == 4 { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-12);
        }
        let again = covq_q_finalize(mq.quantizer.clone(), &phi, 2).unwrap();
        assert_eq!(again, mq);
    }

    #[test]
    fn cuvq_equals_identity_channel_training() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let xs = TrainingSet::from_rows(&rows).unwrap();
        let a = cuvq_train(&xs, 3, Init::Seed(9), TrainParams::default()).unwrap();
        let b = train(&xs, &bsc_channel(3, 0.0).unwrap(), Init::Seed(9), TrainParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
