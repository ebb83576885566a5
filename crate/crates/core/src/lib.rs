//! Predicting unknown privacy preferences from similar users and turning
//! preferences into prohibition/permission norms.
//!
//! The pipeline: a sparse [`PreferenceMatrix`] of answers in [-1, 1], a
//! [`SeparationMeasure`] between users, εν-similar user selection, an
//! aggregating [`Predictor`], a ρμ confidence score, and a
//! [`ThresholdPolicy`] that maps a preference to a norm. Strategies are
//! chosen by name through the [`Registry`].
//!
//! ```
//! use normcast_core::{fixtures, Config, Registry, ContextVars, infer_norm};
//!
//! let m = fixtures::running_example();
//! let cfg = Config { nu: 1, min_common: 1, ..Config::default() };
//! let registry = Registry::builtin();
//! let engine = registry.engine(&cfg).unwrap();
//! let u1 = "u1".try_into().unwrap();
//! let x3 = "x3".try_into().unwrap();
//! let p = engine.predict(&m, &u1, &x3).unwrap();
//! assert_eq!(p.value.get(), -1.0);
//! let policy = registry.policy(&cfg).unwrap();
//! let d = infer_norm(&p, policy.as_ref(), &ContextVars::new()).unwrap();
//! assert_eq!(d.norm().unwrap().to_string(), "Prh(x3)");
//! ```

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod confidence;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod ingest;
pub mod norms;
pub mod prediction;
pub mod preference;
pub mod registry;
pub mod separation;
pub mod similarity;

pub use confidence::{confidence_from_stats, population_sd, rho_mu_confidence, ConfidenceParams};
pub use config::Config;
pub use error::{Error, Result};
pub use evaluate::{
    run_baseline, run_experiment, spearman, tune_confidence, BaselineKind, ExperimentConfig,
    ExperimentReport, Hardness, TuneResult,
};
pub use ingest::{load_csv, rescale_likert, Scale, SyntheticCohortSpec};
pub use norms::{
    classify_regime, confident_thresholds, decide, hard_threshold_norm, infer_norm, ContextVars,
    HardThresholds, NormDecision, Outcome, Regime, ThresholdPolicy,
};
pub use prediction::{Engine, FallbackPolicy, Prediction, Predictor};
pub use preference::{
    CompletedProfile, ElementId, KnownPreference, PreferenceMatrix, PreferenceValue, UserId,
};
pub use registry::Registry;
pub use separation::{cumulative_separation, SeparationMeasure};
pub use similarity::{similar_users, SimilarSet, SimilarityParams};
