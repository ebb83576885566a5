//! Selection of the εν-similar users for a (user, element) query.
//!
//! Members are every candidate within `epsilon` plus the `nu` closest
//! candidates. Candidates are users other than the query user who know the
//! target element and share at least `min_common` (and at least one) known
//! elements with the query user.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::{ElementId, PreferenceMatrix, UserId};
use crate::separation::{common_pairs, SeparationMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParams {
    pub epsilon: f64,
    pub nu: usize,
    pub min_common: usize,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            nu: 5,
            min_common: 5,
        }
    }
}

impl SimilarityParams {
    pub fn new(epsilon: f64, nu: usize, min_common: usize) -> Result<Self> {
        let p = Self {
            epsilon,
            nu,
            min_common,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.nu == 0 {
            return Err(Error::InvalidParams("nu must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub user: UserId,
    pub separation: f64,
}

/// Similar users for one query, ascending by separation (ties by user id).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarSet {
    pub user: UserId,
    pub element: ElementId,
    pub members: Vec<Neighbor>,
    pub params: SimilarityParams,
}

impl SimilarSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn mean_separation(&self) -> Option<f64> {
        if self.members.is_empty() {
            return None;
        }
        let total: f64 = self.members.iter().map(|n| n.separation).sum();
        Some(total / self.members.len() as f64)
    }

    pub fn contains(&self, user: &UserId) -> bool {
        self.members.iter().any(|n| &n.user == user)
    }
}

/// Users with a known preference on `element`, in matrix order.
pub fn knowers(m: &PreferenceMatrix, element: &ElementId) -> Result<Vec<UserId>> {
    let e = m.require_element(element)?;
    Ok(m.column(e).iter().map(|&u| m.user_at(u).clone()).collect())
}

pub fn similar_users(
    m: &PreferenceMatrix,
    sep: &dyn SeparationMeasure,
    user: &UserId,
    element: &ElementId,
    params: &SimilarityParams,
) -> Result<SimilarSet> {
    params.validate()?;
    let u = m.require_user(user)?;
    let e = m.require_element(element)?;
    Neighborhood::build(m, sep, u, None, params.min_common).similar(m, e, params)
}

/// Separations from one query user to every eligible candidate.
///
/// Separation does not depend on the target element, so a neighborhood is
/// computed once per user and reused for all of that user's targets. The
/// matrix used for separations and the one used to look up who knows the
/// target may differ, as long as they share user and element indices.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    query: usize,
    query_id: UserId,
    /// Indexed by user; `None` when the user is not an eligible candidate.
    separations: Vec<Option<f64>>,
}

impl Neighborhood {
    /// `pool`, when given, marks which users may act as candidates.
    pub fn build(
        m: &PreferenceMatrix,
        sep: &dyn SeparationMeasure,
        query: usize,
        pool: Option<&[bool]>,
        min_common: usize,
    ) -> Self {
        let min_common = min_common.max(1);
        let query_row = m.row(query);
        let mut pairs = Vec::new();
        let separations = (0..m.n_users())
            .map(|other| {
                if other == query || pool.is_some_and(|p| !p[other]) {
                    return None;
                }
                common_pairs(query_row, m.row(other), None, &mut pairs);
                (pairs.len() >= min_common).then(|| sep.combine(&pairs))
            })
            .collect();
        Self {
            query,
            query_id: m.user_at(query).clone(),
            separations,
        }
    }

    pub fn query(&self) -> usize {
        self.query
    }

    pub fn separation_to(&self, user: usize) -> Option<f64> {
        self.separations.get(user).copied().flatten()
    }

    /// Similar users for target element `e`, taking knowers from `values`.
    pub fn similar(
        &self,
        values: &PreferenceMatrix,
        e: usize,
        params: &SimilarityParams,
    ) -> Result<SimilarSet> {
        let candidates: Vec<Neighbor> = values
            .column(e)
            .iter()
            .filter_map(|&u| {
                self.separation_to(u).map(|separation| Neighbor {
                    user: values.user_at(u).clone(),
                    separation,
                })
            })
            .collect();
        let element = values.element_at(e).clone();
        if candidates.is_empty() {
            return Err(Error::NoSimilarUsers {
                user: self.query_id.to_string(),
                element: element.to_string(),
            });
        }
        Ok(SimilarSet {
            user: self.query_id.clone(),
            element,
            members: select_members(candidates, params),
            params: *params,
        })
    }
}

fn by_separation_then_id(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.separation
        .total_cmp(&b.separation)
        .then_with(|| a.user.cmp(&b.user))
}

/// Union of the within-epsilon set and the `nu` closest. After sorting both
/// are prefixes, so the union is the longer prefix.
fn select_members(mut candidates: Vec<Neighbor>, params: &SimilarityParams) -> Vec<Neighbor> {
    candidates.sort_by(by_separation_then_id);
    let within = candidates
        .iter()
        .take_while(|n| n.separation <= params.epsilon)
        .count();
    let keep = within.max(params.nu.min(candidates.len()));
    candidates.truncate(keep);
    candidates
}
