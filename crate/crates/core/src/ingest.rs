//! Loading preference data and generating synthetic cohorts.
//!
//! The only on-disk format is a headed CSV, `user_id,element_id,answer`.
//! Answers are either on a declared input scale (e.g. a 1-5 Likert scale)
//! and rescaled into [-1, 1], or already in [-1, 1].

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::{
    CompletedProfile, ElementId, PreferenceMatrix, PreferenceValue, Provenance, UserId,
};

pub const CSV_HEADER: [&str; 3] = ["user_id", "element_id", "answer"];

/// A closed answer scale `[lo, hi]` mapped affinely onto [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Scale {
    lo: f64,
    hi: f64,
}

impl Scale {
    pub const UNIT: Scale = Scale { lo: -1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidScale { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn to_preference(&self, answer: f64) -> Result<PreferenceValue> {
        rescale_likert(answer, self.lo, self.hi)
    }

    /// Inverse of [`Scale::to_preference`].
    pub fn from_preference(&self, value: f64) -> f64 {
        self.lo + (value + 1.0) * self.width() / 2.0
    }

    /// Converts a distance between preferences into a distance on this scale.
    pub fn distance_from_preference(&self, d: f64) -> f64 {
        d * self.width() / 2.0
    }
}

impl TryFrom<[f64; 2]> for Scale {
    type Error = Error;

    fn try_from([lo, hi]: [f64; 2]) -> Result<Self> {
        Scale::new(lo, hi)
    }
}

impl From<Scale> for [f64; 2] {
    fn from(s: Scale) -> Self {
        [s.lo, s.hi]
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Parses `lo:hi`, e.g. `1:5`.
impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParams(format!("scale `{s}` is not of the form lo:hi")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParams(format!("scale bound `{t}` is not a number")))
        };
        Scale::new(parse(lo)?, parse(hi)?)
    }
}

/// Affine map of `[lo, hi]` onto [-1, 1].
pub fn rescale_likert(answer: f64, lo: f64, hi: f64) -> Result<PreferenceValue> {
    if !(lo < hi) {
        return Err(Error::InvalidScale { lo, hi });
    }
    if !(lo..=hi).contains(&answer) {
        return Err(Error::OutOfScale {
            value: answer,
            lo,
            hi,
        });
    }
    let v = -1.0 + 2.0 * (answer - lo) / (hi - lo);
    PreferenceValue::new(v.clamp(-1.0, 1.0))
}

/// One response row as read from CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub user_id: String,
    pub element_id: String,
    pub answer: f64,
}

pub fn load_csv(path: &Path, scale: Option<Scale>) -> Result<PreferenceMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, scale)
}

/// Reads responses; with `scale` answers are rescaled, without it they must
/// already lie in [-1, 1].
pub fn read_csv<R: Read>(reader: R, scale: Option<Scale>) -> Result<PreferenceMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header_err = |message: String| Error::Parse { line: 1, message };
    let headers = rdr
        .headers()
        .map_err(|e| header_err(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(header_err(format!(
            "expected header `{}`, found `{}`",
            CSV_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut m = PreferenceMatrix::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse { line, message };
        let row: RawResponse = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(e.to_string()))?;
        let user = UserId::new(row.user_id).map_err(|e| parse_err(e.to_string()))?;
        let element = ElementId::new(row.element_id).map_err(|e| parse_err(e.to_string()))?;
        let value = match scale {
            Some(s) => s.to_preference(row.answer)?.get(),
            None => match PreferenceValue::new(row.answer) {
                Ok(v) => v.get(),
                Err(_) => {
                    return Err(Error::OutOfScale {
                        value: row.answer,
                        lo: -1.0,
                        hi: 1.0,
                    })
                }
            },
        };
        m.insert(&user, &element, value).map_err(|e| match e {
            Error::DuplicateEntry { user, element, .. } => Error::DuplicateEntry {
                line,
                user,
                element,
            },
            other => other,
        })?;
    }
    Ok(m)
}

/// Writes known entries in insertion order, values in [-1, 1].
///
/// Values use the shortest representation that parses back to the same
/// float, so a dump reloads bit for bit.
pub fn write_csv<W: Write>(m: &PreferenceMatrix, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Config(format!("writing csv: {e}"));
    wtr.write_record(CSV_HEADER).map_err(io)?;
    for (user, element, value) in m.entries() {
        wtr.write_record([user.as_str(), element.as_str(), &value.to_string()])
            .map_err(io)?;
    }
    wtr.flush()
        .map_err(|e| Error::Config(format!("writing csv: {e}")))?;
    Ok(())
}

pub const PROFILE_HEADER: [&str; 5] =
    ["user_id", "element_id", "value", "provenance", "confidence"];

/// Writes a completed profile, one row per element; unresolved entries have
/// an empty value. `only` restricts output to one element.
pub fn write_profile<W: Write>(
    profile: &CompletedProfile,
    writer: W,
    only: Option<&ElementId>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Config(format!("writing csv: {e}"));
    wtr.write_record(PROFILE_HEADER).map_err(io)?;
    for e in &profile.entries {
        if only.is_some_and(|x| *x != e.element) {
            continue;
        }
        let provenance = match e.provenance {
            Provenance::Known => "known",
            Provenance::Predicted => "predicted",
            Provenance::Unresolved => "unresolved",
        };
        wtr.write_record([
            profile.user.as_str(),
            e.element.as_str(),
            &e.value.map(|v| v.get().to_string()).unwrap_or_default(),
            provenance,
            &e.confidence.map(|c| c.to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    wtr.flush()
        .map_err(|e| Error::Config(format!("writing csv: {e}")))?;
    Ok(())
}

pub fn dump_csv(m: &PreferenceMatrix, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(m, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohortSpec {
    pub num_users: usize,
    pub num_elements: usize,
    pub num_clusters: usize,
    pub known_fraction: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticCohortSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(msg));
        if self.num_users == 0 || self.num_elements == 0 || self.num_clusters == 0 {
            return fail("users, elements and clusters must all be positive".into());
        }
        if self.num_clusters > self.num_users {
            return fail(format!(
                "{} clusters cannot be filled by {} users",
                self.num_clusters, self.num_users
            ));
        }
        if !(self.known_fraction > 0.0 && self.known_fraction <= 1.0) {
            return fail(format!(
                "known_fraction {} outside (0, 1]",
                self.known_fraction
            ));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return fail(format!("noise_sd {} must be non-negative", self.noise_sd));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    /// Every user's full preference profile.
    pub ground_truth: PreferenceMatrix,
    /// The entries an agent would know.
    pub observed: PreferenceMatrix,
    /// Cluster of each user, in user order.
    pub clusters: Vec<usize>,
    pub prototypes: Vec<Vec<f64>>,
}

/// Users assigned round-robin to clusters with prototypes drawn uniformly
/// from [-1, 1].
pub fn generate_synthetic(spec: &SyntheticCohortSpec) -> Result<SyntheticCohort> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let prototypes = (0..spec.num_clusters)
        .map(|_| {
            (0..spec.num_elements)
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    build_cohort(spec, prototypes, &mut rng)
}

/// Like [`generate_synthetic`] with caller-chosen cluster prototypes.
pub fn generate_synthetic_with_prototypes(
    spec: &SyntheticCohortSpec,
    prototypes: Vec<Vec<f64>>,
) -> Result<SyntheticCohort> {
    spec.validate()?;
    if prototypes.len() != spec.num_clusters
        || prototypes.iter().any(|p| p.len() != spec.num_elements)
    {
        return Err(Error::InvalidSpec(
            "need one prototype of num_elements values per cluster".into(),
        ));
    }
    if prototypes
        .iter()
        .flatten()
        .any(|v| !(-1.0..=1.0).contains(v))
    {
        return Err(Error::InvalidSpec(
            "prototype values must lie in [-1, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    build_cohort(spec, prototypes, &mut rng)
}

fn build_cohort(
    spec: &SyntheticCohortSpec,
    prototypes: Vec<Vec<f64>>,
    rng: &mut ChaCha8Rng,
) -> Result<SyntheticCohort> {
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|e| Error::InvalidSpec(format!("noise distribution: {e}")))?;
    let user_width = digits(spec.num_users);
    let element_width = digits(spec.num_elements);
    let users: Vec<UserId> = (0..spec.num_users)
        .map(|i| UserId::new(format!("u{i:0user_width$}")))
        .collect::<Result<_>>()?;
    let elements: Vec<ElementId> = (0..spec.num_elements)
        .map(|j| ElementId::new(format!("x{j:0element_width$}")))
        .collect::<Result<_>>()?;

    let mut ground_truth = PreferenceMatrix::new();
    let mut observed = PreferenceMatrix::new();
    for m in [&mut ground_truth, &mut observed] {
        for u in &users {
            m.add_user(u.clone());
        }
        for e in &elements {
            m.add_element(e.clone());
        }
    }

    let clusters: Vec<usize> = (0..spec.num_users).map(|i| i % spec.num_clusters).collect();
    for (u, &cluster) in clusters.iter().enumerate() {
        for (e, &centre) in prototypes[cluster].iter().enumerate() {
            let v = (centre + noise.sample(rng)).clamp(-1.0, 1.0);
            ground_truth.insert_at(u, e, v);
            if rng.random_bool(spec.known_fraction) {
                observed.insert_at(u, e, v);
            }
        }
    }
    Ok(SyntheticCohort {
        ground_truth,
        observed,
        clusters,
        prototypes,
    })
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}
