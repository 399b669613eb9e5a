//! Discrete memoryless channels over the index set `{0, …, 2^B − 1}`.
//!
//! Indexes map to `B`-bit codewords by their natural binary representation.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Largest supported bit width; the transition matrix has `4^B` entries.
pub const MAX_BITS: u32 = 12;

/// Tolerance on row sums of a transition matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A DMC with `L = 2^B` input and output symbols and transition matrix `P(j|i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    bits: u32,
    /// Row-major `L×L`, row = input index, column = output index.
    transition: Vec<f64>,
    /// Bit cross-over probability when the channel is a BSC.
    crossover: Option<f64>,
}

/// Number of differing bits between the `B`-bit codewords of `i` and `j`.
pub fn hamming_distance(i: usize, j: usize, bits: u32) -> Result<u32> {
    let l = 1usize << bits;
    if i >= l || j >= l {
        return Err(invalid(format!("index out of range for {bits} bits: ({i}, {j})")));
    }
    Ok((i ^ j).count_ones())
}

fn check_bits(bits: u32) -> Result<usize> {
    if bits == 0 || bits > MAX_BITS {
        return Err(invalid(format!("bit width must be in 1..={MAX_BITS}, got {bits}")));
    }
    Ok(1usize << bits)
}

/// Binary symmetric channel: `P(j|i) = ε^H (1 − ε)^(B − H)` with `H` the Hamming distance.
pub fn bsc_channel(bits: u32, epsilon: f64) -> Result<ChannelModel> {
    let l = check_bits(bits)?;
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(invalid(format!("cross-over probability must be in [0, 0.5], got {epsilon}")));
    }
    // Per-distance probabilities, shared by every (i, j) pair at that distance.
    let by_distance: Vec<f64> = (0..=bits as i32)
        .map(|h| epsilon.powi(h) * (1.0 - epsilon).powi(bits as i32 - h))
        .collect();
    let mut transition = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..l {
            transition[i * l + j] = by_distance[(i ^ j).count_ones() as usize];
        }
    }
    Ok(ChannelModel { bits, transition, crossover: Some(epsilon) })
}

impl ChannelModel {
    /// The error-free channel, identical to `bsc_channel(bits, 0.0)`.
    pub fn identity(bits: u32) -> Result<Self> {
        bsc_channel(bits, 0.0)
    }

    /// A general DMC from a row-stochastic `L×L` matrix.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let l = rows.len();
        if l < 2 || !l.is_power_of_two() {
            return Err(invalid(format!("alphabet size must be a power of two >= 2, got {l}")));
        }
        let bits = l.trailing_zeros();
        check_bits(bits)?;
        let mut transition = Vec::with_capacity(l * l);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != l {
                return Err(invalid(format!("row {i} has {} entries, expected {l}", row.len())));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(invalid(format!("row {i} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(invalid(format!("row {i} sums to {sum}, expected 1")));
            }
            transition.extend_from_slice(row);
        }
        Ok(Self { bits, transition, crossover: None })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> usize {
        1 << self.bits
    }

    /// Cross-over probability if this channel was built as a BSC.
    pub fn crossover(&self) -> Option<f64> {
        self.crossover
    }

    /// `P(j | i)`.
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.size() + j]
    }

    /// Row `P(· | i)`.
    pub fn row(&self, i: usize) -> &[f64] {
        let l = self.size();
        &self.transition[i * l..(i + 1) * l]
    }

    /// Sends index `i` and returns the received index.
    ///
    /// A BSC flips each bit independently; a general DMC samples its row.
    pub fn transmit<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<usize> {
        let l = self.size();
        if i >= l {
            return Err(invalid(format!("index {i} out of range for alphabet of {l}")));
        }
        if let Some(eps) = self.crossover {
            let mut j = i;
            for b in 0..self.bits {
                if rng.random::<f64>() < eps {
                    j ^= 1 << b;
                }
            }
            return Ok(j);
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let row = self.row(i);
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(j);
            }
        }
        // Rounding left `acc` just below 1; fall back to the last nonzero entry.
        Ok(row.iter().rposition(|p| *p > 0.0).unwrap_or(l - 1))
    }

    /// Parses the channel file format: a line with `L`, then `L` rows of `L` probabilities.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty channel file".into()))?;
        let l: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("bad alphabet size {header:?}")))?;
        let mut rows = Vec::with_capacity(l);
        for r in 0..l {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {r} of {l}")))?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad probability {t:?} in row {r}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if lines.next().is_some() {
            return Err(Error::Parse(format!("more than {l} rows")));
        }
        Self::from_matrix(&rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let l = self.size();
        let mut s = format!("{l}\n");
        for i in 0..l {
            let row: Vec<String> = self.row(i).iter().map(|p| p.to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }
}
