//! JSON experiment configuration and run manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{measurements_for, ExperimentConfig, Scheme};

/// Configuration as written by the user; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "B")]
    pub bits: Option<u32>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub schemes: Option<Vec<Scheme>>,
    pub trials: Option<usize>,
    #[serde(alias = "T")]
    pub training_size: Option<usize>,
    pub seed: Option<u64>,
    pub noise_std: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub redraw_phi: Option<bool>,
    pub alphas: Option<Vec<f64>>,
    pub rates: Option<Vec<u32>>,
    pub seeds: Option<usize>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fills missing keys from `defaults` and validates the result.
    ///
    /// `N` wins over `alpha` when both are present; otherwise `N = round(αM)`.
    pub fn resolve(self, defaults: &ExperimentConfig) -> Result<ExperimentConfig> {
        let m = self.m.unwrap_or(defaults.m);
        let (n, alpha) = match (self.n, self.alpha) {
            (Some(n), _) => (n, n as f64 / m as f64),
            (None, Some(a)) => (measurements_for(a, m), a),
            (None, None) => {
                let a = defaults.alpha;
                (measurements_for(a, m), a)
            }
        };
        let cfg = ExperimentConfig {
            m,
            k: self.k.unwrap_or(defaults.k),
            bits: self.bits.unwrap_or(defaults.bits),
            n,
            alpha,
            epsilons: self.epsilons.unwrap_or_else(|| defaults.epsilons.clone()),
            schemes: self.schemes.unwrap_or_else(|| defaults.schemes.clone()),
            trials: self.trials.unwrap_or(defaults.trials),
            training_size: self.training_size.unwrap_or(defaults.training_size),
            seed: self.seed.unwrap_or(defaults.seed),
            noise_std: self.noise_std.unwrap_or(defaults.noise_std),
            tol: self.tol.unwrap_or(defaults.tol),
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
            redraw_phi: self.redraw_phi.unwrap_or(defaults.redraw_phi),
            alphas: self.alphas.unwrap_or_else(|| defaults.alphas.clone()),
            rates: self.rates.unwrap_or_else(|| defaults.rates.clone()),
            seeds: self.seeds.unwrap_or(defaults.seeds),
        };
        cfg.validate().map_err(|e| Error::Parse(format!("config: {e}")))?;
        Ok(cfg)
    }
}

/// Loads a JSON config, filling omitted keys with the defaults
/// (M=20, K=2, B=8, α=0.5, 10⁵ trials and training samples, tol 1e-6,
/// 200 iterations, no measurement noise).
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    RawConfig::from_file(path)?.resolve(&ExperimentConfig::default())
}

/// Everything needed to re-run a CLI invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub output_dir: PathBuf,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub tool_version: String,
    pub with_timing: bool,
    /// Command-specific inputs (e.g. the quantizer of `eval`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantizer: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: ExperimentConfig, output_dir: PathBuf) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            command: command.to_string(),
            config,
            output_dir,
            timestamp,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            with_timing: false,
            scheme: None,
            epsilon: None,
            channel_file: None,
            quantizer: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: Self = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("manifest: {e}")))?;
        manifest.config.validate()?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> Result<ExperimentConfig> {
        RawConfig::parse(text)?.resolve(&ExperimentConfig::default())
    }

    #[test]
    fn empty_object_is_default_point() {
        let cfg = resolve("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!((cfg.m, cfg.k, cfg.bits, cfg.n, cfg.alpha), (20, 2, 8, 10, 0.5));
        assert_eq!(cfg.trials, 100_000);
        assert_eq!(cfg.tol, 1e-6);
        assert_eq!(cfg.max_iter, 200);
        assert_eq!(cfg.noise_std, 0.0);
    }

    #[test]
    fn alpha_sets_measurements() {
        assert_eq!(resolve(r#"{"alpha": 0.3}"#).unwrap().n, 6);
        let cfg = resolve(r#"{"N": 8, "alpha": 0.3}"#).unwrap();
        assert_eq!((cfg.n, cfg.alpha), (8, 0.4));
    }

    #[test]
    fn rejects_invalid() {
        assert!(resolve(r#"{"K": 25}"#).is_err());
        assert!(resolve(r#"{"K": 10}"#).is_err());
        assert!(resolve(r#"{"alpha": 1.2}"#).is_err());
        assert!(resolve(r#"{"epsilons": [0.7]}"#).is_err());
        assert!(resolve(r#"{"schemes": ["LBG"]}"#).is_err());
        assert!(resolve(r#"{"bogus": 1}"#).is_err());
        assert!(resolve("{").is_err());
        assert!(resolve(r#"{"B": 8, "T": 100}"#).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let mut m = RunManifest::new("sweep-epsilon", resolve(r#"{"trials": 10}"#).unwrap(), dir.path().to_path_buf());
        m.epsilon = Some(0.01);
        m.save(&path).unwrap();
        assert_eq!(RunManifest::load(&path).unwrap(), m);
    }
}
