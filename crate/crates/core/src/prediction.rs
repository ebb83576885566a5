//! Preference prediction from similar users and profile completion.

use serde::{Deserialize, Serialize};

use crate::confidence::{rho_mu_confidence, ConfidenceParams};
use crate::error::{Error, Result};
use crate::preference::{
    CompletedEntry, CompletedProfile, ElementId, PreferenceMatrix, PreferenceValue, Provenance,
    UserId,
};
use crate::separation::SeparationMeasure;
use crate::similarity::{Neighborhood, SimilarSet, SimilarityParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub user: UserId,
    pub element: ElementId,
    pub value: PreferenceValue,
    pub neighbors: SimilarSet,
    pub confidence: Option<f64>,
}

impl Prediction {
    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = Some(confidence);
        self
    }
}

pub trait Predictor: Send + Sync {
    fn name(&self) -> &str;

    /// Combines the members' preferences on the target element.
    /// `values[i]` belongs to `s.members[i]`.
    fn aggregate(&self, s: &SimilarSet, values: &[f64]) -> f64;

    fn predict(&self, m: &PreferenceMatrix, s: &SimilarSet) -> Result<Prediction> {
        let values = neighbor_values(m, s)?;
        let value = self.aggregate(s, &values).clamp(-1.0, 1.0);
        Ok(Prediction {
            user: s.user.clone(),
            element: s.element.clone(),
            value: PreferenceValue::new(value)?,
            neighbors: s.clone(),
            confidence: None,
        })
    }
}

/// Arithmetic mean of the similar users' preferences.
#[derive(Debug, Clone, Copy, Default)]
pub struct AveragePredictor;

impl Predictor for AveragePredictor {
    fn name(&self) -> &str {
        "average"
    }

    fn aggregate(&self, _s: &SimilarSet, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub fn predict_average(m: &PreferenceMatrix, s: &SimilarSet) -> Result<Prediction> {
    AveragePredictor.predict(m, s)
}

/// The members' known preferences on the set's element, in member order.
pub fn neighbor_values(m: &PreferenceMatrix, s: &SimilarSet) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::NoSimilarUsers {
            user: s.user.to_string(),
            element: s.element.to_string(),
        });
    }
    let e = m.require_element(&s.element)?;
    s.members
        .iter()
        .map(|n| {
            let u = m.require_user(&n.user)?;
            m.value_at(u, e).ok_or_else(|| {
                Error::InvalidParams(format!(
                    "similar user `{}` has no known preference on `{}`",
                    n.user, s.element
                ))
            })
        })
        .collect()
}

/// What to do with an unknown entry when no similar user can predict it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackPolicy {
    /// Leave the entry unresolved; no norm is produced for it.
    #[default]
    Skip,
    /// Fill with 0.
    Neutral,
    /// Fill with the mean of every other user's known preference on the element.
    ElementMean,
}

impl FallbackPolicy {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "skip" => Ok(Self::Skip),
            "neutral" => Ok(Self::Neutral),
            "element_mean" => Ok(Self::ElementMean),
            other => Err(Error::UnknownStrategy {
                kind: "fallback",
                name: other.to_owned(),
            }),
        }
    }

    fn resolve(self, m: &PreferenceMatrix, u: usize, e: usize) -> Option<f64> {
        match self {
            Self::Skip => None,
            Self::Neutral => Some(0.0),
            Self::ElementMean => {
                let values: Vec<f64> = m
                    .column(e)
                    .iter()
                    .filter(|&&other| other != u)
                    .filter_map(|&other| m.value_at(other, e))
                    .collect();
                (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
            }
        }
    }
}

/// Copies known entries and fills unknown ones through `predict`.
///
/// `predict` is called with each unknown element index. A
/// [`Error::NoSimilarUsers`] failure is handed to `fallback`; fallback values
/// carry zero confidence. Known entries carry confidence 1.
pub fn complete_profile(
    m: &PreferenceMatrix,
    user: &UserId,
    mut predict: impl FnMut(usize) -> Result<Prediction>,
    fallback: FallbackPolicy,
) -> Result<CompletedProfile> {
    let u = m.require_user(user)?;
    let mut entries = Vec::with_capacity(m.n_elements());
    for (e, element) in m.elements().enumerate() {
        let entry = if let Some(v) = m.value_at(u, e) {
            CompletedEntry {
                element: element.clone(),
                value: Some(PreferenceValue::new(v)?),
                provenance: Provenance::Known,
                confidence: Some(1.0),
            }
        } else {
            match predict(e) {
                Ok(p) => CompletedEntry {
                    element: element.clone(),
                    value: Some(p.value),
                    provenance: Provenance::Predicted,
                    confidence: p.confidence,
                },
                Err(Error::NoSimilarUsers { .. }) => match fallback.resolve(m, u, e) {
                    Some(v) => CompletedEntry {
                        element: element.clone(),
                        value: Some(PreferenceValue::new(v)?),
                        provenance: Provenance::Predicted,
                        confidence: Some(0.0),
                    },
                    None => CompletedEntry {
                        element: element.clone(),
                        value: None,
                        provenance: Provenance::Unresolved,
                        confidence: None,
                    },
                },
                Err(other) => return Err(other),
            }
        };
        entries.push(entry);
    }
    Ok(CompletedProfile {
        user: user.clone(),
        entries,
    })
}

/// The assembled prediction pipeline: selection, aggregation and confidence.
pub struct Engine {
    pub separation: Box<dyn SeparationMeasure>,
    pub predictor: Box<dyn Predictor>,
    pub similarity: SimilarityParams,
    pub confidence: ConfidenceParams,
    pub fallback: FallbackPolicy,
}

impl Engine {
    pub fn new(separation: Box<dyn SeparationMeasure>, predictor: Box<dyn Predictor>) -> Self {
        Self {
            separation,
            predictor,
            similarity: SimilarityParams::default(),
            confidence: ConfidenceParams::default(),
            fallback: FallbackPolicy::default(),
        }
    }

    pub fn neighborhood(&self, m: &PreferenceMatrix, u: usize) -> Neighborhood {
        Neighborhood::build(
            m,
            self.separation.as_ref(),
            u,
            None,
            self.similarity.min_common,
        )
    }

    fn predict_in(
        &self,
        m: &PreferenceMatrix,
        hood: &Neighborhood,
        e: usize,
    ) -> Result<Prediction> {
        let s = hood.similar(m, e, &self.similarity)?;
        let prediction = self.predictor.predict(m, &s)?;
        let sample = neighbor_values(m, &s)?;
        let conf = rho_mu_confidence(&s, &sample, &self.confidence)?;
        Ok(prediction.with_confidence(conf))
    }

    /// Prediction with confidence for one query.
    pub fn predict(
        &self,
        m: &PreferenceMatrix,
        user: &UserId,
        element: &ElementId,
    ) -> Result<Prediction> {
        self.similarity.validate()?;
        self.confidence.validate()?;
        let u = m.require_user(user)?;
        let e = m.require_element(element)?;
        self.predict_in(m, &self.neighborhood(m, u), e)
    }

    pub fn complete(&self, m: &PreferenceMatrix, user: &UserId) -> Result<CompletedProfile> {
        self.similarity.validate()?;
        self.confidence.validate()?;
        let u = m.require_user(user)?;
        let hood = self.neighborhood(m, u);
        complete_profile(m, user, |e| self.predict_in(m, &hood, e), self.fallback)
    }
}
