//! Plain-text report format.
//!
//! ```text
//! # normcast experiment report
//! method=average
//! hardness=regular
//! ...
//!
//! [predictions]
//! user_id,element_id,predicted,actual,distance,confidence,mean_separation,neighbor_sd,neighbors
//! ...
//!
//! [histogram]
//! bin_lo,bin_hi,count
//! ...
//! ```
//!
//! Lines starting with `#` are comments. Header values and CSV cells use the
//! shortest decimal form that parses back to the same `f64`; missing values
//! are empty cells. Distances, predictions and actual answers are on the
//! report's answer scale.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Scale;
use crate::norms::Regime;
use crate::preference::{ElementId, PreferenceMatrix, UserId};

use super::{ExperimentConfig, ExperimentReport, NeighborStats};

const PREDICTIONS: &str = "[predictions]";
const HISTOGRAM: &str = "[histogram]";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportHeader {
    pub method: String,
    pub hardness: String,
    pub seed: u64,
    pub scale: Scale,
    pub rho: f64,
    pub mu: f64,
    pub n_test_users: usize,
    pub n_targets: usize,
    pub n_predictions: usize,
    pub coverage: f64,
    /// APD on the answer scale; NaN without predictions.
    pub mean_distance: f64,
    /// PSD on the answer scale; NaN without predictions.
    pub sd_distance: f64,
    pub regime: Option<Regime>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    #[serde(rename = "bin_lo")]
    pub lo: f64,
    #[serde(rename = "bin_hi")]
    pub hi: f64,
    pub count: usize,
}

/// Neighbour statistics are absent for baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(rename = "user_id")]
    pub user: UserId,
    #[serde(rename = "element_id")]
    pub element: ElementId,
    pub predicted: f64,
    pub actual: f64,
    pub distance: f64,
    pub confidence: Option<f64>,
    pub mean_separation: Option<f64>,
    pub neighbor_sd: Option<f64>,
    pub neighbors: Option<usize>,
}

impl PredictionRecord {
    pub(crate) fn new(
        ground: &PreferenceMatrix,
        cfg: &ExperimentConfig,
        (u, e): (usize, usize),
        predicted: f64,
        actual: f64,
        stats: Option<NeighborStats>,
    ) -> Self {
        let predicted = cfg.scale.from_preference(predicted);
        let actual = cfg.scale.from_preference(actual);
        Self {
            user: ground.user_at(u).clone(),
            element: ground.element_at(e).clone(),
            predicted,
            actual,
            distance: (predicted - actual).abs(),
            confidence: stats.as_ref().map(|s| s.confidence),
            mean_separation: stats.as_ref().map(|s| s.mean_separation),
            neighbor_sd: stats.as_ref().map(|s| s.neighbor_sd),
            neighbors: stats.as_ref().map(|s| s.neighbors),
        }
    }
}

fn header_lines(h: &ReportHeader) -> Vec<(&'static str, String)> {
    vec![
        ("method", h.method.clone()),
        ("hardness", h.hardness.clone()),
        ("seed", h.seed.to_string()),
        ("scale", h.scale.to_string()),
        ("rho", h.rho.to_string()),
        ("mu", h.mu.to_string()),
        ("n_test_users", h.n_test_users.to_string()),
        ("n_targets", h.n_targets.to_string()),
        ("n_predictions", h.n_predictions.to_string()),
        ("coverage", h.coverage.to_string()),
        ("mean_distance", h.mean_distance.to_string()),
        ("sd_distance", h.sd_distance.to_string()),
        (
            "regime",
            h.regime
                .map(|r| r.to_string())
                .unwrap_or_else(|| "none".into()),
        ),
    ]
}

fn csv_section<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output of utf-8 input"))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

const PREDICTION_COLUMNS: [&str; 9] = [
    "user_id",
    "element_id",
    "predicted",
    "actual",
    "distance",
    "confidence",
    "mean_separation",
    "neighbor_sd",
    "neighbors",
];
const HISTOGRAM_COLUMNS: [&str; 3] = ["bin_lo", "bin_hi", "count"];

impl ExperimentReport {
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::from("# normcast experiment report\n");
        for (key, value) in header_lines(&self.header) {
            writeln!(out, "{key}={value}").expect("write to String");
        }
        out.push('\n');
        out.push_str(PREDICTIONS);
        out.push('\n');
        out.push_str(&csv_section(&self.per_prediction, &PREDICTION_COLUMNS)?);
        out.push('\n');
        out.push_str(HISTOGRAM);
        out.push('\n');
        out.push_str(&csv_section(&self.histogram, &HISTOGRAM_COLUMNS)?);
        Ok(out)
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let text = self.to_text().map_err(std::io::Error::other)?;
        w.write_all(text.as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_text()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        text.parse()
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| Error::Parse {
        line,
        message: format!("bad value for {key}: {e}"),
    })
}

fn parse_csv<T: for<'de> Deserialize<'de>>(
    body: &str,
    first_line: u64,
    columns: &[&str],
) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(columns.iter().copied()) {
        return Err(Error::Parse {
            line: first_line,
            message: format!("expected columns {}", columns.join(",")),
        });
    }
    r.deserialize()
        .map(|row| {
            row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::Parse {
                    line: first_line + line.saturating_sub(1),
                    message: e.to_string(),
                }
            })
        })
        .collect()
}

impl FromStr for ExperimentReport {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let pred_at = text
            .find(&format!("\n{PREDICTIONS}\n"))
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing {PREDICTIONS} section"),
            })?;
        let hist_at = text
            .find(&format!("\n{HISTOGRAM}\n"))
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing {HISTOGRAM} section"),
            })?;
        if hist_at < pred_at {
            return Err(Error::Parse {
                line: 0,
                message: "sections out of order".into(),
            });
        }
        let head = &text[..pred_at];
        let pred_body = text[pred_at + PREDICTIONS.len() + 2..hist_at].trim_end_matches('\n');
        let hist_body = &text[hist_at + HISTOGRAM.len() + 2..];
        let line_of = |offset: usize| text[..offset].matches('\n').count() as u64 + 1;

        let mut fields = std::collections::HashMap::new();
        for (i, line) in head.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i as u64 + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            fields.insert(k.trim(), (v.trim(), i as u64 + 1));
        }
        let get = |key: &str| {
            fields.get(key).copied().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing header key {key}"),
            })
        };
        macro_rules! field {
            ($key:literal) => {{
                let (raw, line) = get($key)?;
                parse_value($key, raw, line)?
            }};
        }
        let (regime_raw, regime_line) = get("regime")?;
        let regime = match regime_raw {
            "none" => None,
            raw => Some(parse_value("regime", raw, regime_line)?),
        };
        let header = ReportHeader {
            method: get("method")?.0.to_string(),
            hardness: get("hardness")?.0.to_string(),
            seed: field!("seed"),
            scale: field!("scale"),
            rho: field!("rho"),
            mu: field!("mu"),
            n_test_users: field!("n_test_users"),
            n_targets: field!("n_targets"),
            n_predictions: field!("n_predictions"),
            coverage: field!("coverage"),
            mean_distance: field!("mean_distance"),
            sd_distance: field!("sd_distance"),
            regime,
        };
        let per_prediction: Vec<PredictionRecord> =
            parse_csv(pred_body, line_of(pred_at + 1) + 1, &PREDICTION_COLUMNS)?;
        let histogram: Vec<HistogramBin> =
            parse_csv(hist_body, line_of(hist_at + 1) + 1, &HISTOGRAM_COLUMNS)?;
        if per_prediction.len() != header.n_predictions {
            return Err(Error::Parse {
                line: 0,
                message: format!(
                    "n_predictions={} but {} prediction rows",
                    header.n_predictions,
                    per_prediction.len()
                ),
            });
        }
        Ok(ExperimentReport {
            header,
            histogram,
            per_prediction,
        })
    }
}
