//! Turning preferences into prohibition / permission norms.
//!
//! Every policy ends in the same three-block rule: a preference at or below
//! the prohibition threshold yields `Prh(x)`, one at or above the permission
//! threshold yields `Per(x)`, anything strictly between yields no norm.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prediction::Prediction;
use crate::preference::{ElementId, PreferenceValue, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Deontic {
    Prohibition,
    Permission,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Norm {
    pub element: ElementId,
    pub deontic: Deontic,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.deontic {
            Deontic::Prohibition => write!(f, "Prh({})", self.element),
            Deontic::Permission => write!(f, "Per({})", self.element),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Prohibition,
    Permission,
    NoNorm,
}

impl Outcome {
    /// Label used in norm output records.
    pub fn code(self) -> &'static str {
        match self {
            Outcome::Prohibition => "PRH",
            Outcome::Permission => "PER",
            Outcome::NoNorm => "NONE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormDecision {
    pub element: ElementId,
    pub outcome: Outcome,
    pub preference_used: PreferenceValue,
    pub confidence_used: Option<f64>,
    pub thresholds_used: HardThresholds,
}

impl NormDecision {
    pub fn norm(&self) -> Option<Norm> {
        let deontic = match self.outcome {
            Outcome::Prohibition => Deontic::Prohibition,
            Outcome::Permission => Deontic::Permission,
            Outcome::NoNorm => return None,
        };
        Some(Norm {
            element: self.element.clone(),
            deontic,
        })
    }
}

/// Threshold pair with `-1 <= prh <= 0 <= per <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardThresholds {
    prh: f64,
    per: f64,
}

impl HardThresholds {
    pub fn new(prh: f64, per: f64) -> Result<Self> {
        if !(-1.0..=0.0).contains(&prh) || !(0.0..=1.0).contains(&per) {
            return Err(Error::InvalidParams(format!(
                "thresholds must satisfy -1 <= prh <= 0 <= per <= 1, got ({prh}, {per})"
            )));
        }
        Ok(Self { prh, per })
    }

    pub fn prh(&self) -> f64 {
        self.prh
    }

    pub fn per(&self) -> f64 {
        self.per
    }

    /// `(0, 0)` leaves no room for "no norm": every element gets regulated.
    pub fn is_degenerate(&self) -> bool {
        self.prh == 0.0 && self.per == 0.0
    }

    fn warn_if_degenerate(&self) {
        if self.is_degenerate() {
            log::warn!("thresholds (0, 0) regulate every element");
        }
    }
}

impl Default for HardThresholds {
    fn default() -> Self {
        Self {
            prh: -0.25,
            per: 0.25,
        }
    }
}

pub fn hard_threshold_norm(
    element: &ElementId,
    preference: PreferenceValue,
    t: &HardThresholds,
) -> NormDecision {
    let p = preference.get();
    let outcome = if p <= t.prh {
        Outcome::Prohibition
    } else if t.per <= p {
        Outcome::Permission
    } else {
        Outcome::NoNorm
    };
    NormDecision {
        element: element.clone(),
        outcome,
        preference_used: preference,
        confidence_used: None,
        thresholds_used: *t,
    }
}

/// Confidence-driven thresholds: `-1 + c/3` and `1 - 2c/3`.
pub fn confident_thresholds(confidence: f64) -> Result<HardThresholds> {
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::InvalidConfidence(confidence));
    }
    // single rounding each: (c - 3) / 3 == -1 + c/3, (3 - 2c) / 3 == 1 - 2c/3
    Ok(HardThresholds {
        prh: (confidence - 3.0) / 3.0,
        per: (3.0 - 2.0 * confidence) / 3.0,
    })
}

/// Context variables of an element, such as `sensitivity = "high"`.
pub type ContextVars = BTreeMap<String, String>;

pub trait ThresholdPolicy: Send + Sync {
    fn name(&self) -> &str;

    fn requires_confidence(&self) -> bool {
        false
    }

    /// Implementations must return thresholds within the valid ranges.
    fn thresholds(&self, confidence: Option<f64>, context: &ContextVars) -> Result<HardThresholds>;
}

/// Fixed thresholds regardless of confidence or context.
#[derive(Debug, Clone, Copy)]
pub struct HardPolicy {
    thresholds: HardThresholds,
}

impl HardPolicy {
    pub fn new(thresholds: HardThresholds) -> Self {
        thresholds.warn_if_degenerate();
        Self { thresholds }
    }
}

impl ThresholdPolicy for HardPolicy {
    fn name(&self) -> &str {
        "hard"
    }

    fn thresholds(
        &self,
        _confidence: Option<f64>,
        _context: &ContextVars,
    ) -> Result<HardThresholds> {
        Ok(self.thresholds)
    }
}

/// Thresholds that move toward 0 as confidence rises.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConfidentPolicy;

impl ThresholdPolicy for ConfidentPolicy {
    fn name(&self) -> &str {
        "confident"
    }

    fn requires_confidence(&self) -> bool {
        true
    }

    fn thresholds(
        &self,
        confidence: Option<f64>,
        _context: &ContextVars,
    ) -> Result<HardThresholds> {
        let c = confidence.ok_or_else(|| Error::MissingConfidence(self.name().to_owned()))?;
        confident_thresholds(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextRule {
    pub variable: String,
    pub value: String,
    pub thresholds: HardThresholds,
}

/// Table lookup on context variables: the first rule whose variable has the
/// given value wins, otherwise the default applies.
///
/// A table loaded from CSV uses `variable,value,eps_prh,eps_per`; a row with
/// variable `*` sets the default. For instance, tightening prohibitions for
/// sensitive contexts:
///
/// ```text
/// variable,value,eps_prh,eps_per
/// sensitivity,high,-0.1,0.6
/// *,*,-0.25,0.25
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualPolicy {
    rules: Vec<ContextRule>,
    default: HardThresholds,
}

impl ContextualPolicy {
    pub fn new(rules: Vec<ContextRule>, default: HardThresholds) -> Self {
        default.warn_if_degenerate();
        for rule in &rules {
            rule.thresholds.warn_if_degenerate();
        }
        Self { rules, default }
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            variable: String,
            value: String,
            eps_prh: f64,
            eps_per: f64,
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rules = Vec::new();
        let mut default = None;
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = i as u64 + 2;
            let row = row.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            let thresholds =
                HardThresholds::new(row.eps_prh, row.eps_per).map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })?;
            if row.variable == "*" {
                default = Some(thresholds);
            } else {
                rules.push(ContextRule {
                    variable: row.variable,
                    value: row.value,
                    thresholds,
                });
            }
        }
        Ok(Self::new(rules, default.unwrap_or_default()))
    }
}

impl ThresholdPolicy for ContextualPolicy {
    fn name(&self) -> &str {
        "contextual"
    }

    fn thresholds(
        &self,
        _confidence: Option<f64>,
        context: &ContextVars,
    ) -> Result<HardThresholds> {
        Ok(self
            .rules
            .iter()
            .find(|r| context.get(&r.variable) == Some(&r.value))
            .map_or(self.default, |r| r.thresholds))
    }
}

pub fn infer_norm(
    prediction: &Prediction,
    policy: &dyn ThresholdPolicy,
    context: &ContextVars,
) -> Result<NormDecision> {
    decide(
        &prediction.element,
        prediction.value,
        prediction.confidence,
        policy,
        context,
    )
}

/// Norm decision for any preference, predicted or known.
pub fn decide(
    element: &ElementId,
    preference: PreferenceValue,
    confidence: Option<f64>,
    policy: &dyn ThresholdPolicy,
    context: &ContextVars,
) -> Result<NormDecision> {
    if policy.requires_confidence() && confidence.is_none() {
        return Err(Error::MissingConfidence(policy.name().to_owned()));
    }
    let t = policy.thresholds(confidence, context)?;
    let mut decision = hard_threshold_norm(element, preference, &t);
    decision.confidence_used = confidence;
    Ok(decision)
}

/// Context variables per element, read from CSV rows `element_id,variable,value`.
pub type ElementContexts = BTreeMap<ElementId, ContextVars>;

pub fn element_contexts_from_csv_str(text: &str) -> Result<ElementContexts> {
    #[derive(Deserialize)]
    struct Row {
        element_id: String,
        variable: String,
        value: String,
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = ElementContexts::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let line = i as u64 + 2;
        let parse_error = |message: String| Error::Parse { line, message };
        let row = row.map_err(|e| parse_error(e.to_string()))?;
        let element = ElementId::new(row.element_id).map_err(|e| parse_error(e.to_string()))?;
        let vars = out.entry(element).or_default();
        if vars.insert(row.variable.clone(), row.value).is_some() {
            return Err(parse_error(format!("variable {} set twice", row.variable)));
        }
    }
    Ok(out)
}

pub fn load_element_contexts(path: &Path) -> Result<ElementContexts> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    element_contexts_from_csv_str(&text)
}

pub const NORM_RECORD_HEADER: [&str; 7] = [
    "user_id",
    "element_id",
    "outcome",
    "preference",
    "confidence",
    "prh_threshold",
    "per_threshold",
];

/// Writes one CSV line per decision, headed by [`NORM_RECORD_HEADER`].
/// A missing confidence is an empty cell.
pub fn write_norm_records<'a, W, I>(w: W, records: I) -> Result<()>
where
    W: std::io::Write,
    I: IntoIterator<Item = (&'a UserId, &'a NormDecision)>,
{
    let mut out = csv::Writer::from_writer(w);
    let to_error = |e: csv::Error| Error::Config(format!("writing norm records: {e}"));
    out.write_record(NORM_RECORD_HEADER).map_err(to_error)?;
    for (user, d) in records {
        out.write_record([
            user.as_str(),
            d.element.as_str(),
            d.outcome.code(),
            &d.preference_used.get().to_string(),
            &d.confidence_used.map(|c| c.to_string()).unwrap_or_default(),
            &d.thresholds_used.prh().to_string(),
            &d.thresholds_used.per().to_string(),
        ])
        .map_err(to_error)?;
    }
    out.flush()
        .map_err(|e| Error::Config(format!("writing norm records: {e}")))
}

/// Which norm-building approach suits a prediction regime, from the mean
/// (APD) and spread (PSD) of prediction distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Low APD, low PSD.
    AnyMethod,
    /// Low APD, high PSD.
    AvoidHardThresholds,
    /// High APD, low PSD.
    DoNotUsePredictions,
    /// High APD, high PSD; norms should be rebuilt as data accumulates.
    FunctionThresholdsProvisional,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::AnyMethod => "any_method",
            Regime::AvoidHardThresholds => "avoid_hard_thresholds",
            Regime::DoNotUsePredictions => "do_not_use_predictions",
            Regime::FunctionThresholdsProvisional => "function_thresholds_provisional",
        };
        f.write_str(s)
    }
}

/// Cut points on the [-1, 1] preference scale. A value below its cut is "low".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub apd_cut: f64,
    pub psd_cut: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            apd_cut: 0.5,
            psd_cut: 0.5,
        }
    }
}

impl RegimeThresholds {
    pub fn new(apd_cut: f64, psd_cut: f64) -> Result<Self> {
        if !(apd_cut > 0.0 && psd_cut > 0.0) {
            return Err(Error::InvalidParams(format!(
                "regime cuts must be positive, got ({apd_cut}, {psd_cut})"
            )));
        }
        Ok(Self { apd_cut, psd_cut })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any_method" => Ok(Regime::AnyMethod),
            "avoid_hard_thresholds" => Ok(Regime::AvoidHardThresholds),
            "do_not_use_predictions" => Ok(Regime::DoNotUsePredictions),
            "function_thresholds_provisional" => Ok(Regime::FunctionThresholdsProvisional),
            other => Err(Error::UnknownStrategy {
                kind: "regime",
                name: other.to_string(),
            }),
        }
    }
}

pub fn classify_regime(apd: f64, psd: f64, cuts: &RegimeThresholds) -> Regime {
    match (apd < cuts.apd_cut, psd < cuts.psd_cut) {
        (true, true) => Regime::AnyMethod,
        (true, false) => Regime::AvoidHardThresholds,
        (false, true) => Regime::DoNotUsePredictions,
        (false, false) => Regime::FunctionThresholdsProvisional,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::UserId;
    use crate::similarity::{SimilarSet, SimilarityParams};
    use proptest::prelude::*;

    fn eid() -> ElementId {
        ElementId::new("x").unwrap()
    }

    fn pv(v: f64) -> PreferenceValue {
        PreferenceValue::new(v).unwrap()
    }

    fn prediction(value: f64, confidence: Option<f64>) -> Prediction {
        Prediction {
            user: UserId::new("u1").unwrap(),
            element: ElementId::new("x3").unwrap(),
            value: pv(value),
            neighbors: SimilarSet {
                user: UserId::new("u1").unwrap(),
                element: ElementId::new("x3").unwrap(),
                members: Vec::new(),
                params: SimilarityParams::default(),
            },
            confidence,
        }
    }

    #[test]
    fn hard_threshold_blocks() {
        let t = HardThresholds::new(-0.25, 0.25).unwrap();
        let outcome = |v| hard_threshold_norm(&eid(), pv(v), &t).outcome;
        assert_eq!(outcome(-0.6), Outcome::Prohibition);
        assert_eq!(outcome(0.0), Outcome::NoNorm);
        assert_eq!(outcome(0.25), Outcome::Permission);
        assert_eq!(outcome(-0.25), Outcome::Prohibition);
        assert_eq!(outcome(-1.0), Outcome::Prohibition);
        assert_eq!(outcome(1.0), Outcome::Permission);
    }

    #[test]
    fn invalid_thresholds_rejected() {
        assert!(HardThresholds::new(0.1, 0.5).is_err());
        assert!(HardThresholds::new(-0.5, -0.1).is_err());
        assert!(HardThresholds::new(-1.5, 0.5).is_err());
        assert!(HardThresholds::new(0.0, 0.0).unwrap().is_degenerate());
    }

    #[test]
    fn confident_threshold_values() {
        let t = confident_thresholds(1.0).unwrap();
        assert_eq!((t.prh(), t.per()), (-2.0 / 3.0, 1.0 / 3.0));
        let t = confident_thresholds(0.0).unwrap();
        assert_eq!((t.prh(), t.per()), (-1.0, 1.0));
        let t = confident_thresholds(0.5).unwrap();
        assert!((t.prh() - (-5.0 / 6.0)).abs() < 1e-15);
        assert!((t.per() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            confident_thresholds(1.01),
            Err(Error::InvalidConfidence(_))
        ));
        assert!(matches!(
            confident_thresholds(f64::NAN),
            Err(Error::InvalidConfidence(_))
        ));
    }

    #[test]
    fn infer_norm_examples() {
        let ctx = ContextVars::new();
        let d = infer_norm(&prediction(-1.0, Some(1.0)), &ConfidentPolicy, &ctx).unwrap();
        assert_eq!(d.outcome, Outcome::Prohibition);
        assert_eq!(d.norm().unwrap().to_string(), "Prh(x3)");

        let hard = HardPolicy::new(HardThresholds::default());
        assert_eq!(
            infer_norm(&prediction(0.0, None), &hard, &ctx)
                .unwrap()
                .outcome,
            Outcome::NoNorm
        );
        assert_eq!(
            infer_norm(&prediction(0.0, Some(1.0)), &ConfidentPolicy, &ctx)
                .unwrap()
                .outcome,
            Outcome::NoNorm
        );
        assert_eq!(
            infer_norm(&prediction(1.0, Some(0.0)), &ConfidentPolicy, &ctx)
                .unwrap()
                .outcome,
            Outcome::Permission
        );
        assert!(matches!(
            infer_norm(&prediction(1.0, None), &ConfidentPolicy, &ctx),
            Err(Error::MissingConfidence(_))
        ));
    }

    #[test]
    fn contextual_table() {
        let policy = ContextualPolicy::from_csv_str(
            "variable,value,eps_prh,eps_per\nsensitivity,high,-0.1,0.6\n*,*,-0.5,0.5\n",
        )
        .unwrap();
        let mut ctx = ContextVars::new();
        let t = policy.thresholds(None, &ctx).unwrap();
        assert_eq!((t.prh(), t.per()), (-0.5, 0.5));
        ctx.insert("sensitivity".into(), "high".into());
        let t = policy.thresholds(None, &ctx).unwrap();
        assert_eq!((t.prh(), t.per()), (-0.1, 0.6));
        let d = decide(&eid(), pv(-0.2), None, &policy, &ctx).unwrap();
        assert_eq!(d.outcome, Outcome::Prohibition);

        let bad = ContextualPolicy::from_csv_str("variable,value,eps_prh,eps_per\na,b,0.3,0.5\n");
        assert!(matches!(bad, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn regime_quadrants() {
        let cuts = RegimeThresholds::default();
        assert_eq!(classify_regime(0.1, 0.1, &cuts), Regime::AnyMethod);
        assert_eq!(
            classify_regime(0.1, 0.5, &cuts),
            Regime::AvoidHardThresholds
        );
        assert_eq!(
            classify_regime(0.5, 0.1, &cuts),
            Regime::DoNotUsePredictions
        );
        assert_eq!(
            classify_regime(0.9, 0.9, &cuts),
            Regime::FunctionThresholdsProvisional
        );
        assert!(RegimeThresholds::new(0.0, 1.0).is_err());
    }

    fn thresholds() -> impl Strategy<Value = HardThresholds> {
        (-1.0f64..=0.0, 0.0f64..=1.0).prop_map(|(a, b)| HardThresholds::new(a, b).unwrap())
    }

    proptest! {
        #[test]
        fn exactly_one_outcome(p in -1.0f64..=1.0, t in thresholds()) {
            let d = hard_threshold_norm(&eid(), pv(p), &t);
            let prh = p <= t.prh();
            let per = !prh && t.per() <= p;
            let expected = if prh {
                Outcome::Prohibition
            } else if per {
                Outcome::Permission
            } else {
                Outcome::NoNorm
            };
            prop_assert_eq!(d.outcome, expected);
        }

        #[test]
        fn confidence_only_grows_norm_regions(p in -1.0f64..=1.0, c in 0.0f64..=1.0, dc in 0.0f64..=1.0) {
            let hi = (c + dc).min(1.0);
            let low = hard_threshold_norm(&eid(), pv(p), &confident_thresholds(c).unwrap()).outcome;
            let high = hard_threshold_norm(&eid(), pv(p), &confident_thresholds(hi).unwrap()).outcome;
            if low != Outcome::NoNorm {
                prop_assert_eq!(low, high);
            }
        }

        #[test]
        fn policies_stay_in_range(c in 0.0f64..=1.0, t in thresholds(), sensitive in any::<bool>()) {
            let mut ctx = ContextVars::new();
            if sensitive {
                ctx.insert("sensitivity".into(), "high".into());
            }
            let contextual = ContextualPolicy::new(
                vec![ContextRule { variable: "sensitivity".into(), value: "high".into(), thresholds: t }],
                HardThresholds::default(),
            );
            let policies: [&dyn ThresholdPolicy; 3] = [&HardPolicy::new(t), &ConfidentPolicy, &contextual];
            for policy in policies {
                let out = policy.thresholds(Some(c), &ctx).unwrap();
                prop_assert!((-1.0..=0.0).contains(&out.prh()));
                prop_assert!((0.0..=1.0).contains(&out.per()));
            }
        }
    }

    #[test]
    fn element_contexts_and_records() {
        let ctx = element_contexts_from_csv_str(
            "element_id,variable,value\nx3,sensitivity,high\nx3,recipient,third_party\nx1,sensitivity,low\n",
        )
        .unwrap();
        assert_eq!(ctx.len(), 2);
        let x3: ElementId = "x3".try_into().unwrap();
        assert_eq!(ctx[&x3]["recipient"], "third_party");
        assert!(matches!(
            element_contexts_from_csv_str("element_id,variable,value\nx,a,1\nx,a,2\n"),
            Err(Error::Parse { line: 3, .. })
        ));

        let d = decide(
            &x3,
            PreferenceValue::new(-1.0).unwrap(),
            Some(1.0),
            &ConfidentPolicy,
            &ContextVars::new(),
        )
        .unwrap();
        let u1: UserId = "u1".try_into().unwrap();
        let mut buf = Vec::new();
        write_norm_records(&mut buf, [(&u1, &d)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let expected = format!(
            "user_id,element_id,outcome,preference,confidence,prh_threshold,per_threshold\nu1,x3,PRH,-1,1,{},{}\n",
            -2.0f64 / 3.0,
            1.0f64 / 3.0
        );
        assert_eq!(text, expected);
    }
}
