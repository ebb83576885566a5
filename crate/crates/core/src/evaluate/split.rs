use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::confidence::population_sd;
use crate::error::{Error, Result};
use crate::preference::PreferenceMatrix;

use super::{ExperimentConfig, Hardness};

/// Test/pool partition of one experiment run.
///
/// `value_view` is the input without the masked target answers, and
/// `similarity_view` further thins every user's remaining answers to the
/// configured fraction. Both share the input's user and element indices.
/// Masked answers exist only in the input matrix.
#[derive(Debug, Clone)]
pub struct Split {
    /// Ascending user indices.
    pub test_users: Vec<usize>,
    pub is_test: Vec<bool>,
    /// Masked `(user, element)` pairs, ascending by user then element.
    pub targets: Vec<(usize, usize)>,
    pub value_view: PreferenceMatrix,
    pub similarity_view: PreferenceMatrix,
}

impl Split {
    pub fn pool_mask(&self) -> Vec<bool> {
        self.is_test.iter().map(|t| !t).collect()
    }

    pub fn n_pool(&self) -> usize {
        self.is_test.iter().filter(|t| !**t).count()
    }
}

fn take_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).min(n)
}

/// Spread of a user's answers on the configured answer scale; users without
/// answers have none.
pub fn answer_sd(m: &PreferenceMatrix, u: usize, cfg: &ExperimentConfig) -> Option<f64> {
    let values: Vec<f64> = m.row(u).iter().map(|&(_, v)| v).collect();
    population_sd(&values)
        .ok()
        .map(|sd| cfg.scale.distance_from_preference(sd))
}

pub fn make_split(ground: &PreferenceMatrix, cfg: &ExperimentConfig) -> Result<Split> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_users = ground.n_users();
    let n_test = take_count(cfg.test_user_fraction, n_users);

    let mut test_users: Vec<usize> = match cfg.hardness {
        Hardness::Regular => {
            let mut all: Vec<usize> = (0..n_users).collect();
            all.shuffle(&mut rng);
            all.truncate(n_test);
            all
        }
        Hardness::Medium { min_sd } => {
            let mut eligible: Vec<usize> = (0..n_users)
                .filter(|&u| answer_sd(ground, u, cfg).is_some_and(|sd| sd >= min_sd))
                .collect();
            eligible.shuffle(&mut rng);
            eligible.truncate(n_test);
            eligible
        }
        Hardness::Hard { top_k } => {
            let mut ranked: Vec<(usize, f64)> = (0..n_users)
                .filter_map(|u| answer_sd(ground, u, cfg).map(|sd| (u, sd)))
                .collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked.into_iter().take(top_k).map(|(u, _)| u).collect()
        }
    };
    test_users.sort_unstable();

    let mut is_test = vec![false; n_users];
    for &u in &test_users {
        is_test[u] = true;
    }
    let n_pool = n_users - test_users.len();
    if test_users.is_empty() || n_pool == 0 {
        return Err(Error::InvalidSplit(format!(
            "{} test users and {} pool users out of {}",
            test_users.len(),
            n_pool,
            n_users
        )));
    }

    let mut masked = HashSet::new();
    let mut targets = Vec::new();
    for &u in &test_users {
        let row = ground.row(u);
        let k = take_count(cfg.test_answer_fraction, row.len());
        let mut picked: Vec<usize> = index::sample(&mut rng, row.len(), k).into_vec();
        picked.sort_unstable();
        for i in picked {
            let e = row[i].0;
            masked.insert((u, e));
            targets.push((u, e));
        }
    }

    let mut kept = HashSet::new();
    for u in 0..n_users {
        let remaining: Vec<usize> = ground
            .row(u)
            .iter()
            .map(|&(e, _)| e)
            .filter(|&e| !masked.contains(&(u, e)))
            .collect();
        let k = take_count(cfg.similarity_answer_fraction, remaining.len());
        for i in index::sample(&mut rng, remaining.len(), k) {
            kept.insert((u, remaining[i]));
        }
    }

    let mut value_view = ground.empty_like();
    let mut similarity_view = ground.empty_like();
    for (user, element, v) in ground.entries() {
        let u = ground.user_index(user).expect("registered user");
        let e = ground.element_index(element).expect("registered element");
        if masked.contains(&(u, e)) {
            continue;
        }
        value_view.insert_at(u, e, v);
        if kept.contains(&(u, e)) {
            similarity_view.insert_at(u, e, v);
        }
    }

    Ok(Split {
        test_users,
        is_test,
        targets,
        value_view,
        similarity_view,
    })
}
