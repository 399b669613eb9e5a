//! Plain-text quantizer files.
//!
//! ```text
//! # cscovq quantizer
//! scheme COVQ-E2E
//! M 20
//! N 10
//! K 2
//! phi_seed 1
//! B 8
//! L 256
//! dim 20
//! channel bsc 0.01
//! codebook
//! <L lines of dim values>
//! ```
//!
//! `phi_seed` is the master seed the sensing matrix was drawn from. `dim` is
//! `M` for end-to-end codebooks and `N` for COVQ-Q. The channel line is either `bsc <ε>` or `file <path>`. Values are written in Rust's shortest
//! round-trip notation, so save/load is lossless.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channel::{bsc_channel, ChannelModel};
use crate::covq::Codebook;
use crate::error::{Error, Result};
use crate::evaluation::Scheme;

/// How the quantizer's design channel is described in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelRef {
    Bsc(f64),
    File(PathBuf),
}

impl ChannelRef {
    pub fn load(&self, bits: u32) -> Result<ChannelModel> {
        match self {
            ChannelRef::Bsc(eps) => bsc_channel(bits, *eps),
            ChannelRef::File(path) => {
                let ch = ChannelModel::load(path)?;
                if ch.bits() != bits {
                    return Err(Error::Parse(format!(
                        "channel file {} has {} bits, quantizer has {bits}",
                        path.display(),
                        ch.bits()
                    )));
                }
                Ok(ch)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerFile {
    pub scheme: Scheme,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// Master seed whose sensing-matrix stream produced Φ.
    pub phi_seed: u64,
    pub channel: ChannelRef,
    pub codebook: Codebook,
}

impl QuantizerFile {
    pub fn to_text(&self) -> String {
        let cb = &self.codebook;
        let mut s = String::from("# cscovq quantizer\n");
        let _ = writeln!(s, "scheme {}", self.scheme);
        let _ = writeln!(s, "M {}", self.m);
        let _ = writeln!(s, "N {}", self.n);
        let _ = writeln!(s, "K {}", self.k);
        let _ = writeln!(s, "phi_seed {}", self.phi_seed);
        let _ = writeln!(s, "B {}", cb.bits());
        let _ = writeln!(s, "L {}", cb.size());
        let _ = writeln!(s, "dim {}", cb.dim());
        match &self.channel {
            ChannelRef::Bsc(eps) => {
                let _ = writeln!(s, "channel bsc {eps}");
            }
            ChannelRef::File(p) => {
                let _ = writeln!(s, "channel file {}", p.display());
            }
        }
        s.push_str("codebook\n");
        for j in 0..cb.size() {
            let line: Vec<String> = cb.codevector(j).iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing {name} line")))?;
            let rest = line
                .strip_prefix(name)
                .filter(|r| r.starts_with(' ') || r.is_empty())
                .ok_or_else(|| Error::Parse(format!("expected {name:?}, found {line:?}")))?;
            Ok(rest.trim().to_string())
        };
        let num = |name: &str, v: String| -> Result<usize> {
            v.parse().map_err(|_| Error::Parse(format!("bad {name} value {v:?}")))
        };
        let scheme: Scheme = field("scheme")?.parse()?;
        let m = num("M", field("M")?)?;
        let n = num("N", field("N")?)?;
        let k = num("K", field("K")?)?;
        let seed_text = field("phi_seed")?;
        let phi_seed: u64 = seed_text.parse().map_err(|_| Error::Parse(format!("bad phi_seed {seed_text:?}")))?;
        let bits = num("B", field("B")?)? as u32;
        let l = num("L", field("L")?)?;
        let dim = num("dim", field("dim")?)?;
        let channel_spec = field("channel")?;
        let channel = match channel_spec.split_once(' ') {
            Some(("bsc", eps)) => ChannelRef::Bsc(
                eps.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad cross-over probability {eps:?}")))?,
            ),
            Some(("file", path)) => ChannelRef::File(PathBuf::from(path.trim())),
            _ => return Err(Error::Parse(format!("bad channel line {channel_spec:?}"))),
        };
        field("codebook")?;
        if bits >= usize::BITS || l != 1usize << bits {
            return Err(Error::Parse(format!("L = {l} does not equal 2^{bits}")));
        }
        let expected_dim = if scheme == Scheme::CovqQ { n } else { m };
        if dim != expected_dim {
            return Err(Error::Parse(format!("{scheme} codebook must have dimension {expected_dim}, found {dim}")));
        }
        let mut values = Vec::with_capacity(l * dim);
        for j in 0..l {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing codevector {j} of {l}")))?;
            let before = values.len();
            for t in line.split_whitespace() {
                values.push(t.parse::<f64>().map_err(|_| Error::Parse(format!("bad value {t:?} in codevector {j}")))?);
            }
            if values.len() - before != dim {
                return Err(Error::Parse(format!("codevector {j} has {} values, expected {dim}", values.len() - before)));
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after codebook".into()));
        }
        let codebook = Codebook::new(bits, dim, values)?;
        Ok(Self { scheme, m, n, k, phi_seed, channel, codebook })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 8 * 3), eps in 0.0f64..0.5, q in any::<bool>()) {
            let scheme = if q { Scheme::CovqQ } else { Scheme::CovqE2e };
            let file = QuantizerFile {
                scheme,
                m: 5,
                n: 3,
                k: 1,
                phi_seed: 42,
                channel: ChannelRef::Bsc(eps),
                codebook: Codebook::new(3, 3, values).unwrap(),
            };
            let file = if q { file } else { QuantizerFile { m: 3, n: 2, ..file } };
            let back = QuantizerFile::parse(&file.to_text()).unwrap();
            prop_assert_eq!(back, file);
        }
    }

    #[test]
    fn rejects_malformed() {
        let good = QuantizerFile {
            scheme: Scheme::CovqE2e,
            m: 2,
            n: 1,
            k: 1,
            phi_seed: 0,
            channel: ChannelRef::File(PathBuf::from("ch.txt")),
            codebook: Codebook::zeros(1, 2),
        };
        let text = good.to_text();
        assert_eq!(QuantizerFile::parse(&text).unwrap(), good);
        assert!(QuantizerFile::parse(&text.replace("L 2", "L 4")).is_err());
        assert!(QuantizerFile::parse(&text.replace("dim 2", "dim 1")).is_err());
        assert!(QuantizerFile::parse(&text.replace("channel file", "channel awgn")).is_err());
        let truncated: String = text.lines().take(text.lines().count() - 1).collect::<Vec<_>>().join("\n");
        assert!(QuantizerFile::parse(&truncated).is_err());
        assert!(QuantizerFile::parse(&format!("{text}1 2\n")).is_err());
    }
}
