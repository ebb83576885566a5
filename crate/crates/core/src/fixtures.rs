//! The three-user smart-assistant scenario used throughout the docs and tests.
//!
//! Elements: sharing data with the assistant manufacturer (`x1`), with the
//! internet provider (`x2`) and with third-party skill developers (`x3`).

use crate::preference::{ElementId, PreferenceMatrix, UserId};

const USERS: [&str; 3] = ["u1", "u2", "u3"];
const ELEMENTS: [&str; 3] = ["x1", "x2", "x3"];

/// Preferences known to each user's agent.
pub fn running_example() -> PreferenceMatrix {
    build(&[
        [Some(-1.0), Some(-1.0), None],
        [Some(-1.0), None, Some(-1.0)],
        [Some(1.0), None, Some(1.0)],
    ])
}

/// The users' real preferences.
pub fn running_example_truth() -> PreferenceMatrix {
    build(&[
        [Some(-1.0), Some(-1.0), Some(-1.0)],
        [Some(-1.0), Some(-1.0), Some(-1.0)],
        [Some(1.0), Some(-1.0), Some(1.0)],
    ])
}

fn build(rows: &[[Option<f64>; 3]; 3]) -> PreferenceMatrix {
    let mut m = PreferenceMatrix::new();
    for u in USERS {
        m.add_user(UserId::new(u).unwrap());
    }
    for x in ELEMENTS {
        m.add_element(ElementId::new(x).unwrap());
    }
    for (u, row) in USERS.iter().zip(rows) {
        for (x, value) in ELEMENTS.iter().zip(row) {
            if let Some(v) = value {
                m.insert(&UserId::new(*u).unwrap(), &ElementId::new(*x).unwrap(), *v)
                    .unwrap();
            }
        }
    }
    m
}
