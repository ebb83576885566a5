//! Offline evaluation: hold out answers of test users, predict them from a
//! thinned view of everyone else, and summarise the distances.

mod report;
mod split;
mod stats;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::confidence::{confidence_from_stats, population_sd, ConfidenceParams};
use crate::error::{Error, Result};
use crate::ingest::Scale;
use crate::norms::{classify_regime, RegimeThresholds};
use crate::prediction::{neighbor_values, Predictor};
use crate::separation::SeparationMeasure;
use crate::similarity::{Neighborhood, SimilarityParams};

pub use report::{HistogramBin, PredictionRecord, ReportHeader};
pub use split::{answer_sd, make_split, Split};
pub use stats::{average_ranks, mean_sd, pearson, spearman};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hardness {
    #[default]
    Regular,
    /// Test users are drawn only among users whose answer sd (raw scale) is
    /// at least `min_sd`.
    Medium { min_sd: f64 },
    /// The `top_k` users with the highest answer sd are the test users.
    Hard { top_k: usize },
}

impl Hardness {
    pub const DEFAULT_MIN_SD: f64 = 1.0;
    pub const DEFAULT_TOP_K: usize = 100;

    pub fn label(&self) -> &'static str {
        match self {
            Hardness::Regular => "regular",
            Hardness::Medium { .. } => "medium",
            Hardness::Hard { .. } => "hard",
        }
    }
}

impl FromStr for Hardness {
    type Err = Error;

    /// Parses a level name with its default parameter.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(Hardness::Regular),
            "medium" => Ok(Hardness::Medium {
                min_sd: Self::DEFAULT_MIN_SD,
            }),
            "hard" => Ok(Hardness::Hard {
                top_k: Self::DEFAULT_TOP_K,
            }),
            other => Err(Error::UnknownStrategy {
                kind: "hardness",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Hardness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hardness::Regular => f.write_str("regular"),
            Hardness::Medium { min_sd } => write!(f, "medium(min_sd={min_sd})"),
            Hardness::Hard { top_k } => write!(f, "hard(top_k={top_k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub test_user_fraction: f64,
    pub test_answer_fraction: f64,
    pub similarity_answer_fraction: f64,
    pub hardness: Hardness,
    pub similarity: SimilarityParams,
    pub confidence: ConfidenceParams,
    pub seed: u64,
    /// Answer scale of the data; distances are reported on it.
    pub scale: Scale,
    /// When set, the random baseline draws from this many evenly spaced
    /// answer levels instead of the continuous scale.
    pub random_levels: Option<usize>,
    pub histogram_width: f64,
    pub regime: RegimeThresholds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            test_user_fraction: 0.2,
            test_answer_fraction: 0.2,
            similarity_answer_fraction: 0.4,
            hardness: Hardness::Regular,
            similarity: SimilarityParams::default(),
            confidence: ConfidenceParams::default(),
            seed: 0,
            scale: Scale::UNIT,
            random_levels: None,
            histogram_width: 0.25,
            regime: RegimeThresholds::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fractions = [
            ("test_user_fraction", self.test_user_fraction),
            ("test_answer_fraction", self.test_answer_fraction),
            (
                "similarity_answer_fraction",
                self.similarity_answer_fraction,
            ),
        ];
        for (name, f) in fractions {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be in (0, 1], got {f}"
                )));
            }
        }
        if !(self.histogram_width > 0.0) {
            return Err(Error::InvalidParams(format!(
                "histogram_width must be positive, got {}",
                self.histogram_width
            )));
        }
        if self.random_levels.is_some_and(|n| n < 2) {
            return Err(Error::InvalidParams(
                "random_levels must be at least 2".into(),
            ));
        }
        if let Hardness::Medium { min_sd } = self.hardness {
            if !(min_sd >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "min_sd must be >= 0, got {min_sd}"
                )));
            }
        }
        if let Hardness::Hard { top_k: 0 } = self.hardness {
            return Err(Error::InvalidParams("top_k must be at least 1".into()));
        }
        self.similarity.validate()?;
        self.confidence.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Random,
    GlobalElementMean,
}

impl BaselineKind {
    pub fn label(&self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::GlobalElementMean => "element_mean",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(BaselineKind::Random),
            "element_mean" | "global_element_mean" => Ok(BaselineKind::GlobalElementMean),
            other => Err(Error::UnknownStrategy {
                kind: "baseline",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub header: ReportHeader,
    pub histogram: Vec<HistogramBin>,
    /// Ordered by user index, then element index.
    pub per_prediction: Vec<PredictionRecord>,
}

impl ExperimentReport {
    pub fn n_predictions(&self) -> usize {
        self.header.n_predictions
    }

    pub fn mean_distance(&self) -> f64 {
        self.header.mean_distance
    }

    pub fn sd_distance(&self) -> f64 {
        self.header.sd_distance
    }

    pub fn coverage(&self) -> f64 {
        self.header.coverage
    }

    fn assemble(
        method: String,
        cfg: &ExperimentConfig,
        n_test_users: usize,
        n_targets: usize,
        per_prediction: Vec<PredictionRecord>,
    ) -> Self {
        let distances: Vec<f64> = per_prediction.iter().map(|r| r.distance).collect();
        let (mean_distance, sd_distance) = mean_sd(&distances).unwrap_or((f64::NAN, f64::NAN));
        let regime = (!distances.is_empty()).then(|| {
            let half = cfg.scale.width() / 2.0;
            classify_regime(mean_distance / half, sd_distance / half, &cfg.regime)
        });
        let coverage = if n_targets == 0 {
            0.0
        } else {
            per_prediction.len() as f64 / n_targets as f64
        };
        ExperimentReport {
            header: ReportHeader {
                method,
                hardness: cfg.hardness.to_string(),
                seed: cfg.seed,
                scale: cfg.scale,
                rho: cfg.confidence.rho,
                mu: cfg.confidence.mu,
                n_test_users,
                n_targets,
                n_predictions: per_prediction.len(),
                coverage,
                mean_distance,
                sd_distance,
                regime,
            },
            histogram: histogram(&distances, cfg.histogram_width),
            per_prediction,
        }
    }
}

/// Bins `[k·w, (k+1)·w)` from 0 up to the largest distance; the largest
/// value lands in the last bin.
pub fn histogram(distances: &[f64], width: f64) -> Vec<HistogramBin> {
    let Some(max) = distances.iter().copied().reduce(f64::max) else {
        return Vec::new();
    };
    let n_bins = ((max / width).ceil() as usize).max(1);
    let mut counts = vec![0usize; n_bins];
    for &d in distances {
        let k = ((d / width).floor() as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            count,
        })
        .collect()
}

/// Runs the hold-out protocol with the given strategies.
pub fn run_experiment(
    ground: &crate::preference::PreferenceMatrix,
    cfg: &ExperimentConfig,
    separation: &dyn SeparationMeasure,
    predictor: &dyn Predictor,
) -> Result<ExperimentReport> {
    let split = make_split(ground, cfg)?;
    let pool = split.pool_mask();
    let values = &split.value_view;
    let mut records = Vec::new();
    let mut uncovered = 0usize;

    let mut targets = split.targets.iter().peekable();
    for &u in &split.test_users {
        let hood = Neighborhood::build(
            &split.similarity_view,
            separation,
            u,
            Some(&pool),
            cfg.similarity.min_common,
        );
        while let Some(&(_, e)) = targets.next_if(|t| t.0 == u) {
            let set = match hood.similar(values, e, &cfg.similarity) {
                Ok(set) => set,
                Err(Error::NoSimilarUsers { .. }) => {
                    uncovered += 1;
                    continue;
                }
                Err(other) => return Err(other),
            };
            let prediction = predictor.predict(values, &set)?;
            let sample = neighbor_values(values, &set)?;
            let sd = population_sd(&sample)?;
            let mean_sep = set.mean_separation().unwrap_or(0.0);
            let actual = ground.value_at(u, e).expect("target is a known answer");
            records.push(PredictionRecord::new(
                ground,
                cfg,
                (u, e),
                prediction.value.get(),
                actual,
                Some(NeighborStats {
                    confidence: confidence_from_stats(mean_sep, sd, &cfg.confidence),
                    mean_separation: mean_sep,
                    neighbor_sd: sd,
                    neighbors: set.len(),
                }),
            ));
        }
    }
    debug_assert_eq!(records.len() + uncovered, split.targets.len());
    log::info!(
        "{} predictions, {} uncovered, {} test users",
        records.len(),
        uncovered,
        split.test_users.len()
    );
    Ok(ExperimentReport::assemble(
        predictor.name().to_string(),
        cfg,
        split.test_users.len(),
        split.targets.len(),
        records,
    ))
}

pub(crate) struct NeighborStats {
    pub confidence: f64,
    pub mean_separation: f64,
    pub neighbor_sd: f64,
    pub neighbors: usize,
}

/// Runs a reference predictor on the same split as [`run_experiment`].
pub fn run_baseline(
    ground: &crate::preference::PreferenceMatrix,
    cfg: &ExperimentConfig,
    kind: BaselineKind,
) -> Result<ExperimentReport> {
    let split = make_split(ground, cfg)?;
    let values = &split.value_view;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let element_means: Vec<Option<f64>> = match kind {
        BaselineKind::Random => Vec::new(),
        BaselineKind::GlobalElementMean => (0..values.n_elements())
            .map(|e| {
                let pool_values: Vec<f64> = values
                    .column(e)
                    .iter()
                    .filter(|&&u| !split.is_test[u])
                    .map(|&u| values.value_at(u, e).expect("column lists knowers"))
                    .collect();
                mean_sd(&pool_values).map(|(mean, _)| mean)
            })
            .collect(),
    };

    let mut records = Vec::new();
    for &(u, e) in &split.targets {
        let predicted = match kind {
            BaselineKind::Random => random_answer(&mut rng, cfg.random_levels),
            BaselineKind::GlobalElementMean => match element_means[e] {
                Some(v) => v,
                None => continue,
            },
        };
        let actual = ground.value_at(u, e).expect("target is a known answer");
        records.push(PredictionRecord::new(
            ground,
            cfg,
            (u, e),
            predicted,
            actual,
            None,
        ));
    }
    Ok(ExperimentReport::assemble(
        kind.label().to_string(),
        cfg,
        split.test_users.len(),
        split.targets.len(),
        records,
    ))
}

/// A uniform draw in preference space, optionally snapped to evenly spaced
/// levels that include both ends of the scale.
fn random_answer(rng: &mut ChaCha8Rng, levels: Option<usize>) -> f64 {
    match levels {
        Some(n) => {
            let k = rng.random_range(0..n);
            -1.0 + 2.0 * k as f64 / (n - 1) as f64
        }
        None => rng.random_range(-1.0..=1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneResult {
    pub rho: f64,
    pub mu: f64,
    pub correlation: f64,
}

/// Grid search over `rho` in `{0, step, 2·step, ...} ∩ [0, 1]` with
/// `mu = 1 - rho`, minimising Spearman(confidence, distance). Ties keep the
/// smallest `rho`. Grid points with constant confidence are skipped.
pub fn tune_confidence(report: &ExperimentReport, step: f64) -> Result<TuneResult> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "grid step must be in (0, 1], got {step}"
        )));
    }
    let stats: Vec<(f64, f64, f64)> = report
        .per_prediction
        .iter()
        .filter_map(|r| Some((r.mean_separation?, r.neighbor_sd?, r.distance)))
        .collect();
    if stats.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "{} predictions carry neighbour statistics",
            stats.len()
        )));
    }
    let distances: Vec<f64> = stats.iter().map(|s| s.2).collect();
    let n_steps = (1.0 / step + 1e-9).floor() as usize;
    let mut best: Option<TuneResult> = None;
    for i in 0..=n_steps {
        let rho = (i as f64 * step).min(1.0);
        let params = ConfidenceParams { rho, mu: 1.0 - rho };
        let conf: Vec<f64> = stats
            .iter()
            .map(|&(sep, sd, _)| confidence_from_stats(sep, sd, &params))
            .collect();
        let corr = match spearman(&conf, &distances) {
            Ok(c) => c,
            Err(Error::UndefinedCorrelation(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|b| corr < b.correlation) {
            best = Some(TuneResult {
                rho,
                mu: params.mu,
                correlation: corr,
            });
        }
    }
    best.ok_or_else(|| {
        Error::UndefinedCorrelation("confidence is constant at every grid point".into())
    })
}
