//! Named strategy factories, so configuration can pick implementations of
//! [`SeparationMeasure`], [`Predictor`] and [`ThresholdPolicy`] by name.

use std::collections::BTreeMap;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::norms::{ConfidentPolicy, ContextualPolicy, HardPolicy, ThresholdPolicy};
use crate::prediction::{AveragePredictor, Engine, Predictor};
use crate::separation::{CumulativeSeparation, SeparationMeasure};

type Factory<T> = Box<dyn Fn(&Config) -> Result<Box<T>> + Send + Sync>;

pub struct Registry {
    separations: BTreeMap<String, Factory<dyn SeparationMeasure>>,
    predictors: BTreeMap<String, Factory<dyn Predictor>>,
    policies: BTreeMap<String, Factory<dyn ThresholdPolicy>>,
}

fn build<T: ?Sized>(
    map: &BTreeMap<String, Factory<T>>,
    kind: &'static str,
    name: &str,
    cfg: &Config,
) -> Result<Box<T>> {
    let factory = map.get(name).ok_or_else(|| Error::UnknownStrategy {
        kind,
        name: name.to_string(),
    })?;
    factory(cfg)
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            separations: BTreeMap::new(),
            predictors: BTreeMap::new(),
            policies: BTreeMap::new(),
        }
    }

    /// Every strategy shipped with the crate.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_separation("cumulative", |_| Ok(Box::new(CumulativeSeparation)));
        r.register_predictor("average", |_| Ok(Box::new(AveragePredictor)));
        r.register_policy("hard", |cfg| {
            Ok(Box::new(HardPolicy::new(cfg.hard_thresholds()?)))
        });
        r.register_policy("confident", |_| Ok(Box::new(ConfidentPolicy)));
        r.register_policy("contextual", |cfg| {
            let path = cfg.threshold_table.as_deref().ok_or_else(|| {
                Error::Config("policy \"contextual\" needs threshold_table".into())
            })?;
            Ok(Box::new(ContextualPolicy::from_csv_path(path)?))
        });
        r
    }

    /// Replaces any factory already registered under `name`.
    pub fn register_separation<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&Config) -> Result<Box<dyn SeparationMeasure>> + Send + Sync + 'static,
    {
        self.separations.insert(name.to_string(), Box::new(factory));
    }

    pub fn register_predictor<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&Config) -> Result<Box<dyn Predictor>> + Send + Sync + 'static,
    {
        self.predictors.insert(name.to_string(), Box::new(factory));
    }

    pub fn register_policy<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&Config) -> Result<Box<dyn ThresholdPolicy>> + Send + Sync + 'static,
    {
        self.policies.insert(name.to_string(), Box::new(factory));
    }

    pub fn separation(&self, cfg: &Config) -> Result<Box<dyn SeparationMeasure>> {
        build(&self.separations, "separation", &cfg.separation, cfg)
    }

    pub fn predictor(&self, cfg: &Config) -> Result<Box<dyn Predictor>> {
        build(&self.predictors, "predictor", &cfg.predictor, cfg)
    }

    pub fn policy(&self, cfg: &Config) -> Result<Box<dyn ThresholdPolicy>> {
        build(&self.policies, "policy", &cfg.policy, cfg)
    }

    /// A fully configured prediction engine.
    pub fn engine(&self, cfg: &Config) -> Result<Engine> {
        let mut engine = Engine::new(self.separation(cfg)?, self.predictor(cfg)?);
        engine.similarity = cfg.similarity()?;
        engine.confidence = cfg.confidence()?;
        engine.fallback = cfg.fallback;
        Ok(engine)
    }

    pub fn separation_names(&self) -> impl Iterator<Item = &str> {
        self.separations.keys().map(String::as_str)
    }

    pub fn predictor_names(&self) -> impl Iterator<Item = &str> {
        self.predictors.keys().map(String::as_str)
    }

    pub fn policy_names(&self) -> impl Iterator<Item = &str> {
        self.policies.keys().map(String::as_str)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}
