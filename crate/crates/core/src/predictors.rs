//! The five scoring objects: ML, equal-opportunity (EO), affirmative-action
//! (AA) and the two baselines, fairness through unawareness (FTU) and
//! FairLearning.
//!
//! EO marginalizes the ML score over the sensitive distribution,
//!
//! ```text
//! f_eo(a) = Σ_s p(s) f_ml(s, a)
//! ```
//!
//! which is the backdoor adjustment for `do(A = a)`. AA abducts the
//! correctable residual `a − g(s)`, moves it to every counterfactual group
//! and averages the EO score,
//!
//! ```text
//! f_aa(s, a) = Σ_s' p(s') f_eo(g(s') + a − g(s))
//! ```
//!
//! Both mixtures are evaluated exactly over the finite sensitive support.
//! [`Predictor::sample_decision`] draws from the same distributions by
//! ancestral sampling instead.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AttrValue, Dataset, DecisionKind, Encoding, FeatureMask, Schema};
use crate::error::{Error, Result};
use crate::estimators::{
    fit_attribute_regression, fit_decision_model, AttributeRegression, FeatureModel,
    FittedComponents, GlmModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Ml,
    Eo,
    Aa,
    Ftu,
    FairLearning,
}

impl PredictorKind {
    /// Report order: ML, then the EO-fair pair, then the AA-fair pair.
    pub const ALL: [PredictorKind; 5] = [
        PredictorKind::Ml,
        PredictorKind::Ftu,
        PredictorKind::Eo,
        PredictorKind::FairLearning,
        PredictorKind::Aa,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            PredictorKind::Ml => "f_ml",
            PredictorKind::Eo => "f_eo",
            PredictorKind::Aa => "f_aa",
            PredictorKind::Ftu => "FTU",
            PredictorKind::FairLearning => "FL",
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            PredictorKind::Ml => "ml",
            PredictorKind::Eo => "eo",
            PredictorKind::Aa => "aa",
            PredictorKind::Ftu => "ftu",
            PredictorKind::FairLearning => "fair_learning",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ml" | "f_ml" => Ok(PredictorKind::Ml),
            "eo" | "f_eo" => Ok(PredictorKind::Eo),
            "aa" | "f_aa" => Ok(PredictorKind::Aa),
            "ftu" => Ok(PredictorKind::Ftu),
            "fl" | "fair_learning" | "fairlearning" => Ok(PredictorKind::FairLearning),
            other => Err(Error::InvalidParameter(format!(
                "unknown predictor kind `{other}`"
            ))),
        }
    }
}

/// FairLearning's residual model and the `g` it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualModel {
    pub g: AttributeRegression,
    /// Coefficients are aligned with `g.fits`.
    pub glm: GlmModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    Ml {
        components: Arc<FittedComponents>,
    },
    Eo {
        components: Arc<FittedComponents>,
    },
    Aa {
        components: Arc<FittedComponents>,
    },
    Ftu {
        encoding: Encoding,
        model: FeatureModel,
    },
    FairLearning {
        encoding: Encoding,
        model: ResidualModel,
    },
}

pub fn score_ml(c: &FittedComponents, s: &[usize], a: &[AttrValue]) -> Result<f64> {
    let x = c.encoding().encode(s, a)?;
    Ok(c.f_ml().predict(&x))
}

pub fn score_eo(c: &FittedComponents, a: &[AttrValue]) -> Result<f64> {
    c.schema().check_attributes(a)?;
    Ok(eo_unchecked(c, a, &mut Vec::new()))
}

pub fn score_aa(c: &FittedComponents, s: &[usize], a: &[AttrValue]) -> Result<f64> {
    c.schema().check_sensitive(s)?;
    c.schema().check_attributes(a)?;
    Ok(aa_unchecked(c, s, a))
}

fn eo_unchecked(c: &FittedComponents, a: &[AttrValue], buf: &mut Vec<f64>) -> f64 {
    c.p_s()
        .iter()
        .map(|(s, p)| {
            c.encoding().encode_into(s, a, buf);
            p * c.f_ml().predict(buf)
        })
        .sum()
}

fn aa_unchecked(c: &FittedComponents, s: &[usize], a: &[AttrValue]) -> f64 {
    let enc = c.encoding();
    let g = c.g();
    let own = g.predict(&enc.encode_sensitive(s));
    let mut shifted = a.to_vec();
    let mut buf = Vec::with_capacity(enc.feature_count());
    c.p_s()
        .iter()
        .map(|(s_cf, p)| {
            let other = g.predict(&enc.encode_sensitive(s_cf));
            for ((fit, g_own), g_cf) in g.fits.iter().zip(&own).zip(&other) {
                let x = a[fit.target]
                    .as_num()
                    .expect("correctable columns are numeric");
                shifted[fit.target] = AttrValue::Num(g_cf + (x - g_own));
            }
            p * eo_unchecked(c, &shifted, &mut buf)
        })
        .sum()
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> f64 {
    if rng.gen::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

impl Predictor {
    pub fn ml(components: Arc<FittedComponents>) -> Self {
        Predictor::Ml { components }
    }

    pub fn eo(components: Arc<FittedComponents>) -> Self {
        Predictor::Eo { components }
    }

    pub fn aa(components: Arc<FittedComponents>) -> Self {
        Predictor::Aa { components }
    }

    pub fn kind(&self) -> PredictorKind {
        match self {
            Predictor::Ml { .. } => PredictorKind::Ml,
            Predictor::Eo { .. } => PredictorKind::Eo,
            Predictor::Aa { .. } => PredictorKind::Aa,
            Predictor::Ftu { .. } => PredictorKind::Ftu,
            Predictor::FairLearning { .. } => PredictorKind::FairLearning,
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        match self {
            Predictor::Ml { components }
            | Predictor::Eo { components }
            | Predictor::Aa { components } => components.schema(),
            Predictor::Ftu { encoding, .. } | Predictor::FairLearning { encoding, .. } => {
                encoding.schema()
            }
        }
    }

    /// Decision probability for binary decisions, predicted value otherwise.
    pub fn score(&self, s: &[usize], a: &[AttrValue]) -> Result<f64> {
        match self {
            Predictor::Ml { components } => score_ml(components, s, a),
            Predictor::Eo { components } => score_eo(components, a),
            Predictor::Aa { components } => score_aa(components, s, a),
            Predictor::Ftu { encoding, model } => {
                let x = encoding.encode(s, a)?;
                Ok(model.predict(&x))
            }
            Predictor::FairLearning { encoding, model } => {
                encoding.schema().check_sensitive(s)?;
                encoding.schema().check_attributes(a)?;
                let eps = model.g.residuals(encoding, s, a)?;
                Ok(model.glm.mean(eps))
            }
        }
    }

    pub fn score_rows(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.ensure_schema(data.schema())?;
        data.rows()
            .iter()
            .map(|r| self.score(&r.sensitive, &r.attributes))
            .collect()
    }

    pub fn ensure_schema(&self, schema: &Schema) -> Result<()> {
        if **self.schema() != *schema {
            return Err(Error::SchemaMismatch(format!(
                "predictor fitted on schema {} but data has schema {}",
                &self.schema().fingerprint()[..12],
                &schema.fingerprint()[..12]
            )));
        }
        Ok(())
    }

    /// Draws one decision by ancestral sampling: `s' ~ p(s)` for EO, then
    /// additionally the abducted attribute and a second `s'' ~ p(s)` for AA.
    /// Real-valued decisions return the model mean at the sampled inputs.
    pub fn sample_decision<R: Rng + ?Sized>(
        &self,
        s: &[usize],
        a: &[AttrValue],
        rng: &mut R,
    ) -> Result<f64> {
        let binary = self.schema().decision().kind == DecisionKind::Binary;
        let draw = |rng: &mut R, p: f64| if binary { bernoulli(rng, p) } else { p };
        match self {
            Predictor::Eo { components } => {
                components.schema().check_attributes(a)?;
                let s1 = components.p_s().sample(rng).to_vec();
                let p = score_ml(components, &s1, a)?;
                Ok(draw(rng, p))
            }
            Predictor::Aa { components } => {
                components.schema().check_sensitive(s)?;
                let s1 = components.p_s().sample(rng).to_vec();
                let a1 = components
                    .g()
                    .counterfactual(components.encoding(), a, s, &s1)?;
                let s2 = components.p_s().sample(rng).to_vec();
                let p = score_ml(components, &s2, &a1)?;
                Ok(draw(rng, p))
            }
            _ => {
                let p = self.score(s, a)?;
                Ok(draw(rng, p))
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// FTU: the decision model refit on attribute columns only.
pub fn build_ftu(data: &Dataset) -> Result<Predictor> {
    let encoding = Encoding::new(Arc::clone(data.schema()));
    let model = fit_decision_model(data, &FeatureMask::attributes_only(encoding.schema()))?;
    Ok(Predictor::Ftu { encoding, model })
}

/// FairLearning: the decision model fit on correctable residuals
/// `a − E[A | S = s]` only. With no correctable column this is the
/// intercept-only model.
pub fn build_fairlearning(data: &Dataset) -> Result<Predictor> {
    let schema = Arc::clone(data.schema());
    let g = fit_attribute_regression(data)?;
    let enc = Encoding::new(Arc::clone(&schema));

    // Residuals become the sole numeric attributes of a derived schema.
    let residual_schema = Arc::new(Schema::new(
        schema.sensitive().to_vec(),
        g.fits
            .iter()
            .map(|f| {
                crate::domain::AttributeColumn::numeric(
                    format!("resid:{}", schema.attributes()[f.target].name),
                    false,
                )
            })
            .collect(),
        schema.decision().clone(),
    )?);
    let rows = data
        .rows()
        .iter()
        .map(|r| {
            Ok(crate::domain::Record {
                sensitive: r.sensitive.clone(),
                attributes: g
                    .residuals(&enc, &r.sensitive, &r.attributes)?
                    .into_iter()
                    .map(AttrValue::Num)
                    .collect(),
                decision: r.decision,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let residual_data = Dataset::new(Arc::clone(&residual_schema), rows)?;
    let fitted = fit_decision_model(
        &residual_data,
        &FeatureMask::attributes_only(&residual_schema),
    )?;
    Ok(Predictor::FairLearning {
        encoding: enc,
        model: ResidualModel { g, glm: fitted.glm },
    })
}

/// All five predictors fitted on one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetRepr", into = "SetRepr")]
pub struct PredictorSet {
    pub components: Arc<FittedComponents>,
    pub predictors: Vec<Predictor>,
}

#[derive(Serialize, Deserialize)]
struct SetRepr {
    components: Arc<FittedComponents>,
    ftu: Predictor,
    fair_learning: Predictor,
}

impl TryFrom<SetRepr> for PredictorSet {
    type Error = Error;

    fn try_from(r: SetRepr) -> Result<Self> {
        let schema = r.components.schema();
        for (p, kind) in [
            (&r.ftu, PredictorKind::Ftu),
            (&r.fair_learning, PredictorKind::FairLearning),
        ] {
            if p.kind() != kind {
                return Err(Error::ModelFormat(format!(
                    "expected a `{kind}` predictor, found `{}`",
                    p.kind()
                )));
            }
            p.ensure_schema(schema)?;
        }
        let c = r.components;
        Ok(Self {
            predictors: vec![
                Predictor::ml(Arc::clone(&c)),
                r.ftu,
                Predictor::eo(Arc::clone(&c)),
                r.fair_learning,
                Predictor::aa(Arc::clone(&c)),
            ],
            components: c,
        })
    }
}

impl From<PredictorSet> for SetRepr {
    fn from(set: PredictorSet) -> Self {
        let ftu = set.get(PredictorKind::Ftu).clone();
        let fair_learning = set.get(PredictorKind::FairLearning).clone();
        SetRepr {
            components: set.components,
            ftu,
            fair_learning,
        }
    }
}

impl PredictorSet {
    pub fn fit(train: &Dataset) -> Result<Self> {
        let components = Arc::new(FittedComponents::fit(train)?);
        Self::from_components(components, train)
    }

    /// Wraps given components; the baselines are still fit on `train`.
    pub fn from_components(components: Arc<FittedComponents>, train: &Dataset) -> Result<Self> {
        let predictors = vec![
            Predictor::ml(Arc::clone(&components)),
            build_ftu(train)?,
            Predictor::eo(Arc::clone(&components)),
            build_fairlearning(train)?,
            Predictor::aa(Arc::clone(&components)),
        ];
        Ok(Self {
            components,
            predictors,
        })
    }

    pub fn get(&self, kind: PredictorKind) -> &Predictor {
        self.predictors
            .iter()
            .find(|p| p.kind() == kind)
            .expect("every kind is present")
    }
}
