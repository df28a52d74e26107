//! Fitting the three ingredients of the fair predictors: the decision model
//! `f_ml(s, a)`, the sensitive distribution `p(s)` and the attribute
//! regression `g(s) = E[A | S = s]` on the correctable columns.

mod solvers;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AttrValue, Dataset, DecisionKind, Encoding, FeatureMask, Schema};
use crate::error::{Error, Result};
use crate::scm_sim::sigmoid;

pub(crate) use solvers::{log1pexp, logistic_gradient};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticOptions {
    pub max_iter: usize,
    pub gradient_tol: f64,
    /// Ridge penalty on non-intercept coefficients. Off by default.
    pub ridge: f64,
    pub divergence_norm: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            gradient_tol: 1e-8,
            ridge: 0.0,
            divergence_norm: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Logistic,
    Identity,
}

/// Convergence metadata. For least-squares fits `gradient_inf_norm` is the
/// largest residual/design inner product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub iterations: usize,
    pub gradient_inf_norm: f64,
    pub log_likelihood: Option<f64>,
    pub converged: bool,
}

/// Generalized linear model over a dense input vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmModel {
    pub link: Link,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub fit: Option<FitSummary>,
}

impl GlmModel {
    /// A model with fixed coefficients and no fit metadata.
    pub fn fixed(link: Link, intercept: f64, coefficients: Vec<f64>) -> Result<Self> {
        if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            link,
            intercept,
            coefficients,
            fit: None,
        })
    }

    pub fn linear_predictor(&self, x: impl IntoIterator<Item = f64>) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }

    pub fn mean(&self, x: impl IntoIterator<Item = f64>) -> f64 {
        let eta = self.linear_predictor(x);
        match self.link {
            Link::Logistic => sigmoid(eta),
            Link::Identity => eta,
        }
    }
}

/// A GLM whose inputs are a subset of the encoded feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub features: Vec<usize>,
    pub glm: GlmModel,
}

impl FeatureModel {
    pub fn predict(&self, encoded: &[f64]) -> f64 {
        self.glm.mean(self.features.iter().map(|&j| encoded[j]))
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if self.features.len() != self.glm.coefficients.len() {
            return Err(Error::ModelFormat(
                "feature and coefficient counts differ".into(),
            ));
        }
        if let Some(&j) = self.features.iter().find(|&&j| j >= width) {
            return Err(Error::ModelFormat(format!(
                "feature index {j} outside encoding of width {width}"
            )));
        }
        Ok(())
    }
}

/// One least-squares regression of an attribute column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Attribute index of the regressed column.
    pub target: usize,
    pub model: FeatureModel,
}

/// `g(s)`: one regression per correctable column on the sensitive one-hots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRegression {
    pub fits: Vec<LinearFit>,
}

impl AttributeRegression {
    /// Predicted correctable values for an encoded sensitive prefix.
    pub fn predict(&self, sensitive_encoded: &[f64]) -> Vec<f64> {
        self.fits
            .iter()
            .map(|f| f.model.predict(sensitive_encoded))
            .collect()
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.fits.iter().map(|f| f.target)
    }

    /// Residuals `a_j − g_j(s)` on each correctable column.
    pub fn residuals(&self, encoding: &Encoding, s: &[usize], a: &[AttrValue]) -> Result<Vec<f64>> {
        let gs = self.predict(&encoding.encode_sensitive(s));
        self.fits
            .iter()
            .zip(gs)
            .map(|(f, g)| attr_num(encoding, a, f.target).map(|x| x - g))
            .collect()
    }

    /// Abduction: replaces each correctable column by `g(to) + (a − g(from))`
    /// and leaves every other column untouched.
    pub fn counterfactual(
        &self,
        encoding: &Encoding,
        a: &[AttrValue],
        from: &[usize],
        to: &[usize],
    ) -> Result<Vec<AttrValue>> {
        let g_from = self.predict(&encoding.encode_sensitive(from));
        let g_to = self.predict(&encoding.encode_sensitive(to));
        let mut out = a.to_vec();
        for ((f, gf), gt) in self.fits.iter().zip(g_from).zip(g_to) {
            let x = attr_num(encoding, a, f.target)?;
            out[f.target] = AttrValue::Num(gt + (x - gf));
        }
        Ok(out)
    }

    fn validate(&self, encoding: &Encoding) -> Result<()> {
        let schema = encoding.schema();
        for f in &self.fits {
            let col = schema.attributes().get(f.target).ok_or_else(|| {
                Error::ModelFormat(format!("attribute index {} out of range", f.target))
            })?;
            if !col.is_numeric() {
                return Err(Error::InvalidValue {
                    column: col.name.clone(),
                    message: "regression target must be numeric".into(),
                });
            }
            f.model.check_width(encoding.sensitive_width())?;
        }
        Ok(())
    }
}

fn attr_num(encoding: &Encoding, a: &[AttrValue], j: usize) -> Result<f64> {
    a.get(j)
        .and_then(AttrValue::as_num)
        .ok_or_else(|| Error::InvalidValue {
            column: encoding.schema().attributes()[j].name.clone(),
            message: "correctable column must hold a numeric value".into(),
        })
}

/// Empirical joint distribution over observed sensitive level tuples,
/// sorted lexicographically by tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveDistribution {
    support: Vec<(Vec<usize>, f64)>,
}

impl SensitiveDistribution {
    pub fn from_weights(support: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InsufficientData("empty sensitive support".into()));
        }
        if support.iter().any(|(_, p)| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParameter(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let mut support = support;
        support.sort_by(|a, b| a.0.cmp(&b.0));
        if support.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate sensitive tuple".into()));
        }
        Ok(Self { support })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.support.iter().map(|(s, p)| (s.as_slice(), *p))
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn probability(&self, s: &[usize]) -> f64 {
        self.support
            .binary_search_by(|(t, _)| t.as_slice().cmp(s))
            .map_or(0.0, |i| self.support[i].1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[usize] {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (s, p) in &self.support {
            acc += p;
            if u < acc {
                return s;
            }
        }
        &self.support.last().expect("nonempty").0
    }
}

pub fn fit_sensitive_distribution(data: &Dataset) -> Result<SensitiveDistribution> {
    if data.is_empty() {
        return Err(Error::InsufficientData(
            "cannot estimate p(s) from an empty dataset".into(),
        ));
    }
    let n = data.len() as f64;
    let support = data
        .group_by_sensitive()
        .into_iter()
        .map(|(s, rows)| (s, rows.len() as f64 / n))
        .collect();
    let mut dist = SensitiveDistribution { support };
    // Guard the 1e-12 sum invariant against accumulated rounding.
    let total: f64 = dist.support.iter().map(|(_, p)| p).sum();
    for (_, p) in dist.support.iter_mut() {
        *p /= total;
    }
    Ok(dist)
}

fn design(encoding: &Encoding, data: &Dataset, features: &[usize]) -> (DMatrix<f64>, Vec<String>) {
    let n = data.len();
    let p = features.len() + 1;
    let mut x = DMatrix::zeros(n, p);
    let mut buf = Vec::with_capacity(encoding.feature_count());
    for (i, r) in data.rows().iter().enumerate() {
        encoding.encode_into(&r.sensitive, &r.attributes, &mut buf);
        x[(i, 0)] = 1.0;
        for (k, &j) in features.iter().enumerate() {
            x[(i, k + 1)] = buf[j];
        }
    }
    let names = std::iter::once("(intercept)".to_string())
        .chain(
            features
                .iter()
                .map(|&j| encoding.features()[j].name.clone()),
        )
        .collect();
    (x, names)
}

fn split_beta(beta: &DVector<f64>) -> (f64, Vec<f64>) {
    (beta[0], beta.iter().skip(1).copied().collect())
}

pub fn fit_logistic(data: &Dataset, mask: &FeatureMask) -> Result<FeatureModel> {
    fit_logistic_with(data, mask, &LogisticOptions::default())
}

pub fn fit_logistic_with(
    data: &Dataset,
    mask: &FeatureMask,
    opts: &LogisticOptions,
) -> Result<FeatureModel> {
    let schema = data.schema();
    if schema.decision().kind != DecisionKind::Binary {
        return Err(Error::Unsupported(
            "logistic regression needs a binary decision".into(),
        ));
    }
    let y = data.decisions()?;
    let encoding = Encoding::new(Arc::clone(schema));
    let features = encoding.mask_indices(mask)?;
    if data.len() < features.len() + 1 {
        return Err(Error::InsufficientData(format!(
            "{} rows for {} parameters",
            data.len(),
            features.len() + 1
        )));
    }
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::InsufficientData(
            "both decision classes must be present".into(),
        ));
    }
    let (x, names) = design(&encoding, data, &features);
    let (beta, fit) = solvers::logistic_mle(&x, &y, &names, opts)?;
    let (intercept, coefficients) = split_beta(&beta);
    Ok(FeatureModel {
        features,
        glm: GlmModel {
            link: Link::Logistic,
            intercept,
            coefficients,
            fit: Some(fit),
        },
    })
}

/// Least squares of a real-valued decision on the masked features.
pub fn fit_decision_ols(data: &Dataset, mask: &FeatureMask) -> Result<FeatureModel> {
    let y = data.decisions()?;
    let encoding = Encoding::new(Arc::clone(data.schema()));
    let features = encoding.mask_indices(mask)?;
    fit_ols_features(&encoding, data, &features, DVector::from_vec(y))
}

/// Binary decisions get logistic MLE, real-valued decisions least squares.
pub fn fit_decision_model(data: &Dataset, mask: &FeatureMask) -> Result<FeatureModel> {
    match data.schema().decision().kind {
        DecisionKind::Binary => fit_logistic(data, mask),
        DecisionKind::RealValued => fit_decision_ols(data, mask),
    }
}

fn fit_ols_features(
    encoding: &Encoding,
    data: &Dataset,
    features: &[usize],
    y: DVector<f64>,
) -> Result<FeatureModel> {
    if data.len() < features.len() + 1 {
        return Err(Error::InsufficientData(format!(
            "{} rows for {} parameters",
            data.len(),
            features.len() + 1
        )));
    }
    let (x, names) = design(encoding, data, features);
    let (beta, fit) = solvers::ols(&x, &y, &names)?;
    let (intercept, coefficients) = split_beta(&beta);
    Ok(FeatureModel {
        features: features.to_vec(),
        glm: GlmModel {
            link: Link::Identity,
            intercept,
            coefficients,
            fit: Some(fit),
        },
    })
}

/// Least squares of a numeric attribute column on the masked features.
pub fn fit_linear(data: &Dataset, target: &str, mask: &FeatureMask) -> Result<LinearFit> {
    let schema = data.schema();
    let t = schema
        .attribute_index(target)
        .ok_or_else(|| Error::MissingColumn(target.to_string()))?;
    if !schema.attributes()[t].is_numeric() {
        return Err(Error::InvalidValue {
            column: target.to_string(),
            message: "regression target must be numeric".into(),
        });
    }
    if mask.contains(target) {
        return Err(Error::InvalidParameter(format!(
            "target `{target}` cannot also be a regressor"
        )));
    }
    for (ci, col) in schema.sensitive().iter().enumerate() {
        if !mask.contains(&col.name) {
            continue;
        }
        let mut counts = vec![0usize; col.levels.len()];
        for r in data.rows() {
            counts[r.sensitive[ci]] += 1;
        }
        if let Some((li, c)) = counts.iter().enumerate().find(|(_, &c)| c < 2) {
            return Err(Error::InsufficientData(format!(
                "level `{}` of `{}` has {c} row(s); at least 2 required",
                col.levels[li], col.name
            )));
        }
    }
    let y = DVector::from_iterator(
        data.len(),
        data.rows()
            .iter()
            .map(|r| r.attributes[t].as_num().expect("validated numeric")),
    );
    let encoding = Encoding::new(Arc::clone(schema));
    let features = encoding.mask_indices(mask)?;
    let model = fit_ols_features(&encoding, data, &features, y)?;
    Ok(LinearFit { target: t, model })
}

/// Fits `g` on every correctable column.
pub fn fit_attribute_regression(data: &Dataset) -> Result<AttributeRegression> {
    let schema = data.schema();
    let mask = FeatureMask::sensitive_only(schema);
    let fits = schema
        .correctable_indices()
        .into_iter()
        .map(|j| fit_linear(data, &schema.attributes()[j].name, &mask))
        .collect::<Result<Vec<_>>>()?;
    Ok(AttributeRegression { fits })
}

#[derive(Serialize, Deserialize)]
struct ComponentsRepr {
    schema: Arc<Schema>,
    f_ml: FeatureModel,
    p_s: SensitiveDistribution,
    g: AttributeRegression,
}

/// Everything the ML, EO and AA predictors are built from, fitted against
/// one schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComponentsRepr", into = "ComponentsRepr")]
pub struct FittedComponents {
    encoding: Encoding,
    f_ml: FeatureModel,
    p_s: SensitiveDistribution,
    g: AttributeRegression,
}

impl TryFrom<ComponentsRepr> for FittedComponents {
    type Error = Error;

    fn try_from(r: ComponentsRepr) -> Result<Self> {
        FittedComponents::from_parts(r.schema, r.f_ml, r.p_s, r.g)
    }
}

impl From<FittedComponents> for ComponentsRepr {
    fn from(c: FittedComponents) -> Self {
        ComponentsRepr {
            schema: Arc::clone(c.encoding.schema()),
            f_ml: c.f_ml,
            p_s: c.p_s,
            g: c.g,
        }
    }
}

impl FittedComponents {
    pub fn fit(data: &Dataset) -> Result<Self> {
        let schema = data.schema();
        let f_ml = fit_decision_model(data, &FeatureMask::all(schema))?;
        let p_s = fit_sensitive_distribution(data)?;
        let g = fit_attribute_regression(data)?;
        Self::from_parts(Arc::clone(schema), f_ml, p_s, g)
    }

    pub fn from_parts(
        schema: Arc<Schema>,
        f_ml: FeatureModel,
        p_s: SensitiveDistribution,
        g: AttributeRegression,
    ) -> Result<Self> {
        let encoding = Encoding::new(schema);
        f_ml.check_width(encoding.feature_count())?;
        let expected_link = match encoding.schema().decision().kind {
            DecisionKind::Binary => Link::Logistic,
            DecisionKind::RealValued => Link::Identity,
        };
        if f_ml.glm.link != expected_link {
            return Err(Error::ModelFormat(
                "decision model link does not match the decision kind".into(),
            ));
        }
        for (s, _) in p_s.iter() {
            encoding.schema().check_sensitive(s)?;
        }
        g.validate(&encoding)?;
        if g.targets().collect::<Vec<_>>() != encoding.schema().correctable_indices() {
            return Err(Error::ModelFormat(
                "g must cover exactly the correctable columns".into(),
            ));
        }
        Ok(Self {
            encoding,
            f_ml,
            p_s,
            g,
        })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        self.encoding.schema()
    }

    pub fn encoding(&self) -> &Encoding {
        &self.encoding
    }

    pub fn f_ml(&self) -> &FeatureModel {
        &self.f_ml
    }

    pub fn p_s(&self) -> &SensitiveDistribution {
        &self.p_s
    }

    pub fn g(&self) -> &AttributeRegression {
        &self.g
    }
}

/// First-order optimality check for a logistic model: `‖Xᵀ(y − σ(Xβ))‖∞`.
pub fn logistic_score_norm(data: &Dataset, model: &FeatureModel) -> Result<f64> {
    let encoding = Encoding::new(Arc::clone(data.schema()));
    let y = data.decisions()?;
    let (x, _) = design(&encoding, data, &model.features);
    let beta = DVector::from_iterator(
        model.features.len() + 1,
        std::iter::once(model.glm.intercept).chain(model.glm.coefficients.iter().copied()),
    );
    Ok(logistic_gradient(&x, &y, &beta, 0.0).amax())
}

/// Bernoulli log-likelihood of `model` on `data`.
pub fn logistic_log_likelihood(data: &Dataset, model: &FeatureModel) -> Result<f64> {
    let encoding = Encoding::new(Arc::clone(data.schema()));
    let mut buf = Vec::new();
    let mut ll = 0.0;
    for r in data.rows() {
        encoding.encode_into(&r.sensitive, &r.attributes, &mut buf);
        let eta = model
            .glm
            .linear_predictor(model.features.iter().map(|&j| buf[j]));
        let y = r.decision.ok_or(Error::MissingDecisions(1))?;
        ll += y * eta - log1pexp(eta);
    }
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AttributeColumn, DecisionColumn, Record, SensitiveColumn};
    use crate::scm_sim::{admissions_schema, simulate, ScmParams, SimSpec};

    fn row(s: usize, a: f64, y: f64) -> Record {
        Record {
            sensitive: vec![s],
            attributes: vec![AttrValue::Num(a)],
            decision: Some(y),
        }
    }

    #[test]
    fn logistic_recovers_generating_coefficients() {
        let d = simulate(&SimSpec {
            params: ScmParams::default(),
            n: 100_000,
            seed: 2024,
        })
        .unwrap();
        let m = fit_logistic(&d, &FeatureMask::all(d.schema())).unwrap();
        let fit = m.glm.fit.unwrap();
        assert!(fit.converged && fit.gradient_inf_norm <= 1e-8);
        assert!((m.glm.intercept + 1.0).abs() < 0.1, "{:?}", m.glm);
        // features: [sex=m, score]
        assert!((m.glm.coefficients[0] - 1.0).abs() < 0.1);
        assert!((m.glm.coefficients[1] - 2.0).abs() < 0.1);
        assert!(logistic_score_norm(&d, &m).unwrap() <= 1e-8);
    }

    #[test]
    fn separable_data_is_an_error() {
        let rows = (0..20)
            .map(|i| row(i % 2, 0.05 * i as f64, (i % 2) as f64))
            .collect();
        let d = Dataset::new(admissions_schema(), rows).unwrap();
        let err = fit_logistic(&d, &FeatureMask::all(d.schema())).unwrap_err();
        assert!(matches!(err, Error::PerfectSeparation(_)), "{err}");
    }

    #[test]
    fn masked_sensitive_gives_score_constant_in_s() {
        let d = simulate(&SimSpec {
            params: ScmParams::default(),
            n: 2000,
            seed: 4,
        })
        .unwrap();
        let m = fit_logistic(&d, &FeatureMask::attributes_only(d.schema())).unwrap();
        let enc = Encoding::new(Arc::clone(d.schema()));
        let a = [AttrValue::Num(0.4)];
        let f = m.predict(&enc.encode(&[0], &a).unwrap());
        let male = m.predict(&enc.encode(&[1], &a).unwrap());
        assert_eq!(f.to_bits(), male.to_bits());
    }

    #[test]
    fn likelihood_beats_zero_vector() {
        let d = simulate(&SimSpec {
            params: ScmParams::default(),
            n: 500,
            seed: 8,
        })
        .unwrap();
        let m = fit_logistic(&d, &FeatureMask::all(d.schema())).unwrap();
        let zero = FeatureModel {
            features: m.features.clone(),
            glm: GlmModel::fixed(Link::Logistic, 0.0, vec![0.0; 2]).unwrap(),
        };
        assert!(
            logistic_log_likelihood(&d, &m).unwrap() >= logistic_log_likelihood(&d, &zero).unwrap()
        );
    }

    #[test]
    fn fitting_is_deterministic() {
        let d = simulate(&SimSpec {
            params: ScmParams::default(),
            n: 800,
            seed: 12,
        })
        .unwrap();
        let a = FittedComponents::fit(&d).unwrap();
        let b = FittedComponents::fit(&d).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn one_class_rejected() {
        let rows = (0..10).map(|i| row(i % 2, 0.1 * i as f64, 1.0)).collect();
        let d = Dataset::new(admissions_schema(), rows).unwrap();
        assert!(matches!(
            fit_logistic(&d, &FeatureMask::all(d.schema())),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn group_means_from_linear_fit() {
        // f: 0.4, 0.6 (mean 0.50); m: 0.50, 0.54 (mean 0.52)
        let rows = vec![
            row(0, 0.4, 0.0),
            row(0, 0.6, 1.0),
            row(1, 0.50, 0.0),
            row(1, 0.54, 1.0),
        ];
        let d = Dataset::new(admissions_schema(), rows).unwrap();
        let g = fit_attribute_regression(&d).unwrap();
        let enc = Encoding::new(Arc::clone(d.schema()));
        let gf = g.predict(&enc.encode_sensitive(&[0]))[0];
        let gm = g.predict(&enc.encode_sensitive(&[1]))[0];
        assert!(
            (gf - 0.50).abs() < 1e-12 && (gm - 0.52).abs() < 1e-12,
            "{gf} {gm}"
        );
    }

    #[test]
    fn intercept_only_and_constant_target() {
        let rows = vec![
            row(0, 0.3, 0.0),
            row(0, 0.3, 1.0),
            row(1, 0.3, 0.0),
            row(1, 0.3, 1.0),
        ];
        let d = Dataset::new(admissions_schema(), rows).unwrap();
        let lf = fit_linear(&d, "score", &FeatureMask::sensitive_only(d.schema())).unwrap();
        assert!(lf.model.glm.coefficients[0].abs() < 1e-12);
        assert!((lf.model.glm.intercept - 0.3).abs() < 1e-12);

        let rows = vec![row(0, 0.1, 0.0), row(1, 0.5, 1.0), row(1, 0.9, 1.0)];
        let d = Dataset::new(admissions_schema(), rows).unwrap();
        let lf = fit_linear(&d, "score", &FeatureMask::none()).unwrap();
        assert!(lf.model.glm.coefficients.is_empty());
        assert!((lf.model.glm.intercept - 0.5).abs() < 1e-12);
        // one female row only: fails the two-per-level precondition
        assert!(matches!(
            fit_linear(&d, "score", &FeatureMask::sensitive_only(d.schema())),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn linear_residuals_orthogonal_to_design() {
        let d = simulate(&SimSpec {
            params: ScmParams {
                lambda: 0.3,
                ..Default::default()
            },
            n: 5000,
            seed: 21,
        })
        .unwrap();
        let lf = fit_linear(&d, "score", &FeatureMask::sensitive_only(d.schema())).unwrap();
        assert!(lf.model.glm.fit.unwrap().gradient_inf_norm <= 1e-8);
    }

    #[test]
    fn sensitive_distribution_counts() {
        let rows: Vec<Record> = (0..5000).map(|i| row(i % 2, 0.5, 0.0)).collect();
        let d = Dataset::new(admissions_schema(), rows).unwrap();
        let p = fit_sensitive_distribution(&d).unwrap();
        assert_eq!(p.probability(&[0]), 0.5);
        assert_eq!(p.probability(&[1]), 0.5);

        let schema = Arc::new(
            Schema::new(
                vec![
                    SensitiveColumn {
                        name: "race".into(),
                        levels: vec!["w".into(), "nw".into()],
                    },
                    SensitiveColumn {
                        name: "sex".into(),
                        levels: vec!["f".into(), "m".into()],
                    },
                ],
                vec![AttributeColumn::numeric("x", true)],
                DecisionColumn {
                    name: "y".into(),
                    kind: DecisionKind::Binary,
                },
            )
            .unwrap(),
        );
        let mk = |r, s| Record {
            sensitive: vec![r, s],
            attributes: vec![AttrValue::Num(0.0)],
            decision: None,
        };
        let d = Dataset::new(schema, vec![mk(0, 0), mk(0, 1), mk(1, 0), mk(1, 0)]).unwrap();
        let p = fit_sensitive_distribution(&d).unwrap();
        assert_eq!(p.probability(&[0, 0]), 0.25);
        assert_eq!(p.probability(&[0, 1]), 0.25);
        assert_eq!(p.probability(&[1, 0]), 0.5);
        assert_eq!(p.probability(&[1, 1]), 0.0);
        assert_eq!(p.len(), 3);

        let empty = Dataset::new(admissions_schema(), vec![]).unwrap();
        assert!(fit_sensitive_distribution(&empty).is_err());
    }

    #[test]
    fn components_json_round_trip() {
        let d = simulate(&SimSpec {
            params: ScmParams::default(),
            n: 1000,
            seed: 1,
        })
        .unwrap();
        let c = FittedComponents::fit(&d).unwrap();
        let j = serde_json::to_string(&c).unwrap();
        let back: FittedComponents = serde_json::from_str(&j).unwrap();
        assert_eq!(back, c);
    }
}
