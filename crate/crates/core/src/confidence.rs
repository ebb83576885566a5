//! ρμ-confidence of a prediction.
//!
//! Confidence drops with the mean separation between the query user and its
//! similar users, and with the spread of their preferences on the target.
//! Each term is capped at 1 before weighting, so the result stays in [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::SimilarSet;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceParams {
    pub rho: f64,
    pub mu: f64,
}

impl Default for ConfidenceParams {
    fn default() -> Self {
        Self { rho: 0.5, mu: 0.5 }
    }
}

impl ConfidenceParams {
    pub fn new(rho: f64, mu: f64) -> Result<Self> {
        let p = Self { rho, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.rho) || !unit.contains(&self.mu) {
            return Err(Error::InvalidParams(format!(
                "rho and mu must lie in [0, 1], got ({}, {})",
                self.rho, self.mu
            )));
        }
        if (self.rho + self.mu - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidParams(format!(
                "rho + mu must equal 1, got {}",
                self.rho + self.mu
            )));
        }
        Ok(())
    }
}

/// Population standard deviation (divides by N).
pub fn population_sd(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt())
}

/// Confidence from precomputed neighbor statistics.
pub fn confidence_from_stats(mean_separation: f64, neighbor_sd: f64, p: &ConfidenceParams) -> f64 {
    let conf = 1.0 - p.rho * mean_separation.min(1.0) - p.mu * neighbor_sd.min(1.0);
    conf.clamp(0.0, 1.0)
}

/// `sample` holds the members' preferences on the query element.
pub fn rho_mu_confidence(s: &SimilarSet, sample: &[f64], p: &ConfidenceParams) -> Result<f64> {
    let mean_separation = s.mean_separation().ok_or_else(|| Error::NoSimilarUsers {
        user: s.user.to_string(),
        element: s.element.to_string(),
    })?;
    let sd = population_sd(sample)?;
    Ok(confidence_from_stats(mean_separation, sd, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::{ElementId, UserId};
    use crate::similarity::{Neighbor, SimilarityParams};
    use proptest::prelude::*;

    fn set(separations: &[f64]) -> SimilarSet {
        SimilarSet {
            user: UserId::new("q").unwrap(),
            element: ElementId::new("x").unwrap(),
            members: separations
                .iter()
                .enumerate()
                .map(|(i, &separation)| Neighbor {
                    user: UserId::new(format!("n{i}")).unwrap(),
                    separation,
                })
                .collect(),
            params: SimilarityParams::default(),
        }
    }

    #[test]
    fn population_sd_divides_by_n() {
        assert_eq!(population_sd(&[-1.0]).unwrap(), 0.0);
        assert_eq!(population_sd(&[-1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(population_sd(&[0.5, 0.5, 0.5]).unwrap(), 0.0);
        assert!(matches!(population_sd(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn confidence_examples() {
        let half = ConfidenceParams::new(0.5, 0.5).unwrap();
        assert_eq!(
            rho_mu_confidence(&set(&[0.0]), &[-1.0], &half).unwrap(),
            1.0
        );

        let sep_only = ConfidenceParams::new(1.0, 0.0).unwrap();
        assert_eq!(
            rho_mu_confidence(&set(&[2.0]), &[0.3], &sep_only).unwrap(),
            0.0
        );

        // 1 - 0.5 * 0.4 - 0.5 * 0.2
        assert!((confidence_from_stats(0.4, 0.2, &half) - 0.7).abs() < 1e-15);

        assert!(matches!(
            rho_mu_confidence(&set(&[]), &[0.1], &half),
            Err(Error::NoSimilarUsers { .. })
        ));
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(ConfidenceParams::new(0.3, 0.3).is_err());
        assert!(ConfidenceParams::new(-0.5, 1.5).is_err());
        assert!(ConfidenceParams::new(0.25, 0.75).is_ok());
    }

    proptest! {
        #[test]
        fn bounded_and_monotone(
            rho in 0.0f64..=1.0,
            sep in 0.0f64..10.0,
            sd in 0.0f64..2.0,
            dsep in 0.0f64..1.0,
            dsd in 0.0f64..1.0,
        ) {
            let p = ConfidenceParams { rho, mu: 1.0 - rho };
            let c = confidence_from_stats(sep, sd, &p);
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!(confidence_from_stats(sep + dsep, sd, &p) <= c);
            prop_assert!(confidence_from_stats(sep, sd + dsd, &p) <= c);
        }
    }
}
