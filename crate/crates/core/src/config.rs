//! Flat TOML configuration shared by the library and the CLI.
//!
//! Every key is optional; unknown keys are rejected.
//!
//! ```toml
//! separation = "cumulative"
//! predictor = "average"
//! epsilon = 0.0
//! nu = 5
//! min_common = 5
//! fallback = "skip"
//! rho = 0.5
//! mu = 0.5
//! policy = "confident"
//! eps_prh = -0.25
//! eps_per = 0.25
//! # threshold_table = "contexts.csv"
//! apd_cut = 0.5
//! psd_cut = 0.5
//! hardness = "regular"
//! min_sd = 1.0
//! top_k = 100
//! seed = 0
//! scale = [1, 5]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceParams;
use crate::error::{Error, Result};
use crate::evaluate::{ExperimentConfig, Hardness};
use crate::ingest::Scale;
use crate::norms::{HardThresholds, RegimeThresholds};
use crate::prediction::FallbackPolicy;
use crate::similarity::SimilarityParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardnessLevel {
    #[default]
    Regular,
    Medium,
    Hard,
}

impl std::str::FromStr for HardnessLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(Self::Regular),
            "medium" => Ok(Self::Medium),
            "hard" => Ok(Self::Hard),
            other => Err(Error::UnknownStrategy {
                kind: "hardness",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub separation: String,
    pub predictor: String,
    pub epsilon: f64,
    pub nu: usize,
    pub min_common: usize,
    pub fallback: FallbackPolicy,
    pub rho: f64,
    pub mu: f64,
    pub policy: String,
    pub eps_prh: f64,
    pub eps_per: f64,
    /// Contextual threshold table; relative paths resolve against the
    /// directory of the config file.
    pub threshold_table: Option<PathBuf>,
    pub apd_cut: f64,
    pub psd_cut: f64,
    pub test_user_fraction: f64,
    pub test_answer_fraction: f64,
    pub similarity_answer_fraction: f64,
    pub hardness: HardnessLevel,
    pub min_sd: f64,
    pub top_k: usize,
    pub seed: u64,
    /// Answer scale of evaluated data; [-1, 1] when absent.
    pub scale: Option<Scale>,
    pub random_levels: Option<usize>,
    pub histogram_width: f64,
}

impl Default for Config {
    fn default() -> Self {
        let similarity = SimilarityParams::default();
        let confidence = ConfidenceParams::default();
        let hard = HardThresholds::default();
        let regime = RegimeThresholds::default();
        let experiment = ExperimentConfig::default();
        Self {
            separation: "cumulative".into(),
            predictor: "average".into(),
            epsilon: similarity.epsilon,
            nu: similarity.nu,
            min_common: similarity.min_common,
            fallback: FallbackPolicy::default(),
            rho: confidence.rho,
            mu: confidence.mu,
            policy: "confident".into(),
            eps_prh: hard.prh(),
            eps_per: hard.per(),
            threshold_table: None,
            apd_cut: regime.apd_cut,
            psd_cut: regime.psd_cut,
            test_user_fraction: experiment.test_user_fraction,
            test_answer_fraction: experiment.test_answer_fraction,
            similarity_answer_fraction: experiment.similarity_answer_fraction,
            hardness: HardnessLevel::Regular,
            min_sd: Hardness::DEFAULT_MIN_SD,
            top_k: Hardness::DEFAULT_TOP_K,
            seed: experiment.seed,
            scale: None,
            random_levels: None,
            histogram_width: experiment.histogram_width,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(table), Some(dir)) = (&cfg.threshold_table, path.parent()) {
            if table.is_relative() {
                cfg.threshold_table = Some(dir.join(table));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn similarity(&self) -> Result<SimilarityParams> {
        SimilarityParams::new(self.epsilon, self.nu, self.min_common)
    }

    pub fn confidence(&self) -> Result<ConfidenceParams> {
        ConfidenceParams::new(self.rho, self.mu)
    }

    pub fn hard_thresholds(&self) -> Result<HardThresholds> {
        HardThresholds::new(self.eps_prh, self.eps_per)
    }

    pub fn regime_thresholds(&self) -> Result<RegimeThresholds> {
        RegimeThresholds::new(self.apd_cut, self.psd_cut)
    }

    pub fn hardness(&self) -> Hardness {
        match self.hardness {
            HardnessLevel::Regular => Hardness::Regular,
            HardnessLevel::Medium => Hardness::Medium {
                min_sd: self.min_sd,
            },
            HardnessLevel::Hard => Hardness::Hard { top_k: self.top_k },
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            test_user_fraction: self.test_user_fraction,
            test_answer_fraction: self.test_answer_fraction,
            similarity_answer_fraction: self.similarity_answer_fraction,
            hardness: self.hardness(),
            similarity: self.similarity()?,
            confidence: self.confidence()?,
            seed: self.seed,
            scale: self.scale.unwrap_or(Scale::UNIT),
            random_levels: self.random_levels,
            histogram_width: self.histogram_width,
            regime: self.regime_thresholds()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        assert_eq!(Config::from_toml_str("").unwrap(), Config::default());
        let exp = Config::default().experiment().unwrap();
        assert_eq!(exp, ExperimentConfig::default());
    }

    #[test]
    fn documented_keys_parse() {
        let cfg = Config::from_toml_str(
            r#"
            separation = "cumulative"
            epsilon = 0.5
            nu = 1
            min_common = 1
            fallback = "element_mean"
            rho = 0.0
            mu = 1.0
            policy = "hard"
            eps_prh = -0.5
            eps_per = 0.5
            hardness = "hard"
            top_k = 10
            seed = 7
            scale = [1, 5]
            random_levels = 5
            "#,
        )
        .unwrap();
        assert_eq!(
            cfg.similarity().unwrap(),
            SimilarityParams::new(0.5, 1, 1).unwrap()
        );
        assert_eq!(cfg.fallback, FallbackPolicy::ElementMean);
        assert_eq!(cfg.hardness(), Hardness::Hard { top_k: 10 });
        let exp = cfg.experiment().unwrap();
        assert_eq!(exp.scale, Scale::new(1.0, 5.0).unwrap());
        assert_eq!(exp.seed, 7);
        assert_eq!(exp.random_levels, Some(5));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(matches!(
            Config::from_toml_str("sigma = 1"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Config::from_toml_str("scale = [5, 1]"),
            Err(Error::Config(_))
        ));
        let cfg = Config::from_toml_str("rho = 0.9\nmu = 0.9").unwrap();
        assert!(cfg.confidence().is_err());
        assert!(cfg.experiment().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = Config {
            scale: Some(Scale::new(1.0, 5.0).unwrap()),
            threshold_table: Some("t.csv".into()),
            ..Config::default()
        };
        let back = Config::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn relative_table_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("normcast.toml");
        std::fs::write(&path, "threshold_table = \"ctx.csv\"\n").unwrap();
        let cfg = Config::load(&path).unwrap();
        assert_eq!(cfg.threshold_table, Some(dir.path().join("ctx.csv")));
    }
}
