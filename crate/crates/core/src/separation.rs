//! Separation between users, measured only on commonly known elements.
//!
//! A [`SeparationMeasure`] never sees a matrix: it receives the aligned
//! pairs of values both users hold on their common elements. Anything
//! outside those elements therefore cannot influence the result.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::preference::{ElementId, PreferenceMatrix, UserId};

/// Elements on which both users have a known preference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonElements {
    pub pair: (UserId, UserId),
    /// In matrix element order.
    pub elements: Vec<ElementId>,
}

impl CommonElements {
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }
}

pub trait SeparationMeasure: Send + Sync {
    fn name(&self) -> &str;

    /// Separation computed from `(value of u1, value of u2)` over a
    /// nonempty set of common elements.
    ///
    /// Implementations must be non-negative, symmetric under swapping each
    /// pair, zero exactly when every pair is equal, and satisfy the triangle
    /// inequality when all three users are restricted to the same elements.
    fn combine(&self, pairs: &[(f64, f64)]) -> f64;

    /// Separation of `u1` and `u2`, optionally restricted to `restrict_to`.
    fn evaluate(
        &self,
        m: &PreferenceMatrix,
        u1: &UserId,
        u2: &UserId,
        restrict_to: Option<&BTreeSet<ElementId>>,
    ) -> Result<f64> {
        let a = m.require_user(u1)?;
        let b = m.require_user(u2)?;
        let restrict = restrict_to.map(|set| element_indices(m, set)).transpose()?;
        let mut pairs = Vec::new();
        common_pairs(m.row(a), m.row(b), restrict.as_deref(), &mut pairs);
        if pairs.is_empty() {
            return Err(Error::NoCommonElements(u1.to_string(), u2.to_string()));
        }
        Ok(self.combine(&pairs))
    }
}

/// Sum of absolute differences over the common elements. Not normalised by
/// the number of common elements.
#[derive(Debug, Clone, Copy, Default)]
pub struct CumulativeSeparation;

impl SeparationMeasure for CumulativeSeparation {
    fn name(&self) -> &str {
        "cumulative"
    }

    fn combine(&self, pairs: &[(f64, f64)]) -> f64 {
        pairs.iter().map(|&(a, b)| (a - b).abs()).sum()
    }
}

pub fn common_elements(m: &PreferenceMatrix, u1: &UserId, u2: &UserId) -> Result<CommonElements> {
    let a = m.require_user(u1)?;
    let b = m.require_user(u2)?;
    let mut elements = Vec::new();
    merge_rows(m.row(a), m.row(b), None, |e, _, _| {
        elements.push(m.element_at(e).clone())
    });
    Ok(CommonElements {
        pair: (u1.clone(), u2.clone()),
        elements,
    })
}

/// The cumulative separation, for callers that do not go through a registry.
pub fn cumulative_separation(
    m: &PreferenceMatrix,
    u1: &UserId,
    u2: &UserId,
    restrict_to: Option<&BTreeSet<ElementId>>,
) -> Result<f64> {
    CumulativeSeparation.evaluate(m, u1, u2, restrict_to)
}

fn element_indices(m: &PreferenceMatrix, set: &BTreeSet<ElementId>) -> Result<Vec<usize>> {
    let mut idx = set
        .iter()
        .map(|e| m.require_element(e))
        .collect::<Result<Vec<_>>>()?;
    idx.sort_unstable();
    Ok(idx)
}

/// Fills `out` with aligned value pairs on the common elements of two rows.
/// `restrict`, when given, must be sorted ascending.
pub(crate) fn common_pairs(
    a: &[(usize, f64)],
    b: &[(usize, f64)],
    restrict: Option<&[usize]>,
    out: &mut Vec<(f64, f64)>,
) {
    out.clear();
    merge_rows(a, b, restrict, |_, x, y| out.push((x, y)));
}

fn merge_rows(
    a: &[(usize, f64)],
    b: &[(usize, f64)],
    restrict: Option<&[usize]>,
    mut visit: impl FnMut(usize, f64, f64),
) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (ea, va) = a[i];
        let (eb, vb) = b[j];
        match ea.cmp(&eb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if restrict.is_none_or(|r| r.binary_search(&ea).is_ok()) {
                    visit(ea, va, vb);
                }
                i += 1;
                j += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::running_example as example_matrix;

    fn uid(s: &str) -> UserId {
        UserId::new(s).unwrap()
    }

    fn eid(s: &str) -> ElementId {
        ElementId::new(s).unwrap()
    }

    #[test]
    fn common_elements_on_running_example() {
        let m = example_matrix();
        let c = common_elements(&m, &uid("u1"), &uid("u2")).unwrap();
        assert_eq!(c.elements, vec![eid("x1")]);
        let rev = common_elements(&m, &uid("u2"), &uid("u1")).unwrap();
        assert_eq!(rev.elements, c.elements);
        let c23 = common_elements(&m, &uid("u2"), &uid("u3")).unwrap();
        assert_eq!(c23.elements, vec![eid("x1"), eid("x3")]);
    }

    #[test]
    fn disjoint_and_full_overlap() {
        let mut m = PreferenceMatrix::new();
        m.insert(&uid("a"), &eid("x1"), 1.0).unwrap();
        m.insert(&uid("b"), &eid("x2"), 1.0).unwrap();
        assert!(common_elements(&m, &uid("a"), &uid("b"))
            .unwrap()
            .is_empty());
        assert!(matches!(
            cumulative_separation(&m, &uid("a"), &uid("b"), None),
            Err(Error::NoCommonElements(..))
        ));

        let mut full = PreferenceMatrix::new();
        for u in ["a", "b"] {
            for x in ["x1", "x2", "x3"] {
                full.insert(&uid(u), &eid(x), 0.5).unwrap();
            }
        }
        let c = common_elements(&full, &uid("a"), &uid("b")).unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn cumulative_separation_examples() {
        let m = example_matrix();
        assert_eq!(
            cumulative_separation(&m, &uid("u1"), &uid("u2"), None).unwrap(),
            0.0
        );
        assert_eq!(
            cumulative_separation(&m, &uid("u1"), &uid("u3"), None).unwrap(),
            2.0
        );

        // |0.5 - 0| + |-1 - (-1)| over C = {x1, x3}
        let mut m = PreferenceMatrix::new();
        m.insert(&uid("u1"), &eid("x1"), 0.5).unwrap();
        m.insert(&uid("u1"), &eid("x3"), -1.0).unwrap();
        m.insert(&uid("u2"), &eid("x1"), 0.0).unwrap();
        m.insert(&uid("u2"), &eid("x2"), 1.0).unwrap();
        m.insert(&uid("u2"), &eid("x3"), -1.0).unwrap();
        assert_eq!(
            cumulative_separation(&m, &uid("u1"), &uid("u2"), None).unwrap(),
            0.5
        );
    }

    #[test]
    fn restriction_limits_the_sum() {
        let m = example_matrix();
        let only_x3: BTreeSet<_> = [eid("x3")].into();
        assert_eq!(
            cumulative_separation(&m, &uid("u2"), &uid("u3"), Some(&only_x3)).unwrap(),
            2.0
        );
        assert_eq!(
            cumulative_separation(&m, &uid("u2"), &uid("u3"), None).unwrap(),
            4.0
        );
        assert!(matches!(
            cumulative_separation(&m, &uid("u1"), &uid("u2"), Some(&only_x3)),
            Err(Error::NoCommonElements(..))
        ));
        let ghost: BTreeSet<_> = [eid("x9")].into();
        assert!(matches!(
            cumulative_separation(&m, &uid("u1"), &uid("u2"), Some(&ghost)),
            Err(Error::NotFound { .. })
        ));
    }
}
