//! Users, elements and sparse preference profiles.
//!
//! A [`PreferenceMatrix`] stores only known preferences; an absent entry is
//! the unknown marker. Users and elements keep their registration order and
//! entries keep their insertion order, so every traversal is deterministic.

use std::borrow::Borrow;
use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident, $kind:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self> {
                let id = id.into();
                if id.is_empty() {
                    return Err(Error::EmptyId);
                }
                Ok(Self(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }

            pub(crate) const KIND: &'static str = $kind;
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = Error;

            fn try_from(value: String) -> Result<Self> {
                Self::new(value)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl TryFrom<&str> for $name {
            type Error = Error;

            fn try_from(value: &str) -> Result<Self> {
                Self::new(value)
            }
        }
    };
}

string_id!(
    /// A user. Each user owns exactly one agent, so the two are not distinguished.
    UserId,
    "user"
);
string_id!(
    /// Something users hold preferences about: an action, or an action in a context.
    ElementId,
    "element"
);

/// A preference in [-1, 1]: -1 total disapproval, 0 neutral, 1 total approval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PreferenceValue(f64);

impl PreferenceValue {
    pub const MIN: f64 = -1.0;
    pub const MAX: f64 = 1.0;

    pub fn new(value: f64) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::OutOfRange(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<PreferenceValue> for f64 {
    fn from(value: PreferenceValue) -> Self {
        value.0
    }
}

/// A profile entry as seen by an agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnownPreference {
    Known(PreferenceValue),
    Unknown,
}

impl KnownPreference {
    pub fn value(self) -> Option<f64> {
        match self {
            KnownPreference::Known(v) => Some(v.get()),
            KnownPreference::Unknown => None,
        }
    }

    pub fn is_known(self) -> bool {
        matches!(self, KnownPreference::Known(_))
    }
}

/// Sparse users x elements table of known preferences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreferenceMatrix {
    users: IndexSet<UserId>,
    elements: IndexSet<ElementId>,
    /// Per user, `(element index, value)` sorted by element index.
    rows: Vec<Vec<(usize, f64)>>,
    /// Per element, users holding a known value, sorted by user index.
    columns: Vec<Vec<usize>>,
    /// `(user index, element index)` in insertion order.
    log: Vec<(usize, usize)>,
}

impl PreferenceMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a user, returning its index. Re-registering is a no-op.
    pub fn add_user(&mut self, user: UserId) -> usize {
        let (idx, fresh) = self.users.insert_full(user);
        if fresh {
            self.rows.push(Vec::new());
        }
        idx
    }

    /// Registers an element, returning its index. Re-registering is a no-op.
    pub fn add_element(&mut self, element: ElementId) -> usize {
        let (idx, fresh) = self.elements.insert_full(element);
        if fresh {
            self.columns.push(Vec::new());
        }
        idx
    }

    /// Stores a known preference, registering user and element on first sight.
    ///
    /// Values outside [-1, 1] and entries that are already known are rejected
    /// before anything is stored.
    pub fn insert(&mut self, user: &UserId, element: &ElementId, value: f64) -> Result<()> {
        PreferenceValue::new(value)?;
        if let (Some(u), Some(e)) = (self.user_index(user), self.element_index(element)) {
            if self.value_at(u, e).is_some() {
                return Err(Error::DuplicateEntry {
                    line: 0,
                    user: user.to_string(),
                    element: element.to_string(),
                });
            }
        }
        let u = self.add_user(user.clone());
        let e = self.add_element(element.clone());
        self.insert_at(u, e, value);
        Ok(())
    }

    /// Index-level insert for callers that already validated the value and
    /// know the slot is empty.
    pub(crate) fn insert_at(&mut self, u: usize, e: usize, value: f64) {
        debug_assert!((-1.0..=1.0).contains(&value));
        let row = &mut self.rows[u];
        let pos = row.partition_point(|&(idx, _)| idx < e);
        debug_assert!(row.get(pos).is_none_or(|&(idx, _)| idx != e));
        row.insert(pos, (e, value));
        let column = &mut self.columns[e];
        let pos = column.partition_point(|&idx| idx < u);
        column.insert(pos, u);
        self.log.push((u, e));
    }

    pub fn get(&self, user: &UserId, element: &ElementId) -> Result<KnownPreference> {
        let u = self.require_user(user)?;
        let e = self.require_element(element)?;
        Ok(match self.value_at(u, e) {
            Some(v) => KnownPreference::Known(PreferenceValue(v)),
            None => KnownPreference::Unknown,
        })
    }

    pub fn users(&self) -> impl ExactSizeIterator<Item = &UserId> {
        self.users.iter()
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &ElementId> {
        self.elements.iter()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Number of known entries.
    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    pub fn user_index<Q: AsRef<str> + ?Sized>(&self, user: &Q) -> Option<usize> {
        self.users.get_index_of(user.as_ref())
    }

    pub fn element_index<Q: AsRef<str> + ?Sized>(&self, element: &Q) -> Option<usize> {
        self.elements.get_index_of(element.as_ref())
    }

    pub fn require_user(&self, user: &UserId) -> Result<usize> {
        self.user_index(user).ok_or_else(|| Error::NotFound {
            kind: UserId::KIND,
            id: user.to_string(),
        })
    }

    pub fn require_element(&self, element: &ElementId) -> Result<usize> {
        self.element_index(element).ok_or_else(|| Error::NotFound {
            kind: ElementId::KIND,
            id: element.to_string(),
        })
    }

    pub fn user_at(&self, idx: usize) -> &UserId {
        &self.users[idx]
    }

    pub fn element_at(&self, idx: usize) -> &ElementId {
        &self.elements[idx]
    }

    /// Known entries of a user as `(element index, value)`, ascending by element index.
    pub fn row(&self, u: usize) -> &[(usize, f64)] {
        &self.rows[u]
    }

    /// Indices of users with a known value on an element, ascending.
    pub fn column(&self, e: usize) -> &[usize] {
        &self.columns[e]
    }

    pub fn value_at(&self, u: usize, e: usize) -> Option<f64> {
        let row = &self.rows[u];
        row.binary_search_by_key(&e, |&(idx, _)| idx)
            .ok()
            .map(|pos| row[pos].1)
    }

    /// Known entries in insertion order.
    pub fn entries(&self) -> impl Iterator<Item = (&UserId, &ElementId, f64)> + '_ {
        self.log.iter().map(move |&(u, e)| {
            let v = self.value_at(u, e).expect("logged entry is stored");
            (&self.users[u], &self.elements[e], v)
        })
    }

    /// A matrix with the same users and elements (same indices) but no entries.
    pub(crate) fn empty_like(&self) -> Self {
        Self {
            users: self.users.clone(),
            elements: self.elements.clone(),
            rows: vec![Vec::new(); self.users.len()],
            columns: vec![Vec::new(); self.elements.len()],
            log: Vec::new(),
        }
    }
}

/// Number of known entries for `user`.
pub fn known_count(m: &PreferenceMatrix, user: &UserId) -> Result<usize> {
    let u = m.require_user(user)?;
    Ok(m.row(u).len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Known,
    Predicted,
    /// No prediction could be made and the fallback left the entry open.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletedEntry {
    pub element: ElementId,
    pub value: Option<PreferenceValue>,
    pub provenance: Provenance,
    pub confidence: Option<f64>,
}

/// A user's profile with unknown entries filled by prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedProfile {
    pub user: UserId,
    pub entries: Vec<CompletedEntry>,
}

impl CompletedProfile {
    /// Builds a profile where every value is taken as known.
    pub fn from_values<I, E>(user: UserId, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = (E, f64)>,
        E: Into<String>,
    {
        let entries = values
            .into_iter()
            .map(|(e, v)| {
                Ok(CompletedEntry {
                    element: ElementId::new(e)?,
                    value: Some(PreferenceValue::new(v)?),
                    provenance: Provenance::Known,
                    confidence: None,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { user, entries })
    }

    pub fn value(&self, element: &ElementId) -> Option<f64> {
        self.entries
            .iter()
            .find(|entry| &entry.element == element)
            .and_then(|entry| entry.value.map(PreferenceValue::get))
    }

    pub fn is_complete(&self) -> bool {
        self.entries.iter().all(|entry| entry.value.is_some())
    }
}

/// Euclidean distance between two completed profiles.
///
/// Entries are matched by element id, so both profiles must cover the same
/// elements in any order.
pub fn distance(a: &CompletedProfile, b: &CompletedProfile) -> Result<f64> {
    if a.entries.len() != b.entries.len() {
        return Err(Error::DimensionMismatch);
    }
    let mut sum = 0.0;
    for entry in &a.entries {
        let other = b
            .entries
            .iter()
            .find(|o| o.element == entry.element)
            .ok_or(Error::DimensionMismatch)?;
        let x = entry
            .value
            .ok_or_else(|| Error::Incomplete(a.user.to_string()))?;
        let y = other
            .value
            .ok_or_else(|| Error::Incomplete(b.user.to_string()))?;
        let d = x.get() - y.get();
        sum += d * d;
    }
    Ok(sum.sqrt())
}
