//! Fairness and accuracy metrics evaluated on held-out data.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, DecisionKind, Encoding, Schema};
use crate::error::{Error, Result};
use crate::estimators::{fit_sensitive_distribution, AttributeRegression};
use crate::predictors::{Predictor, PredictorKind};

pub const DEFAULT_BINS: usize = 20;
pub const BIN_SMOOTHING: f64 = 1e-6;
pub const PROB_CLIP: f64 = 1e-12;

/// Two levels of one sensitive column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPair {
    pub column: usize,
    pub advantaged: usize,
    pub disadvantaged: usize,
}

impl GroupPair {
    pub fn new(
        schema: &Schema,
        column: &str,
        advantaged: &str,
        disadvantaged: &str,
    ) -> Result<Self> {
        let col = schema
            .sensitive_index(column)
            .ok_or_else(|| Error::MissingColumn(column.to_string()))?;
        let adv = schema.level_index(col, advantaged)?;
        let dis = schema.level_index(col, disadvantaged)?;
        Self::from_indices(schema, col, adv, dis)
    }

    pub fn from_indices(
        schema: &Schema,
        column: usize,
        advantaged: usize,
        disadvantaged: usize,
    ) -> Result<Self> {
        let col = schema.sensitive().get(column).ok_or_else(|| {
            Error::InvalidParameter(format!("sensitive column #{column} out of range"))
        })?;
        if advantaged >= col.levels.len() || disadvantaged >= col.levels.len() {
            return Err(Error::InvalidParameter(format!(
                "level out of range for `{}`",
                col.name
            )));
        }
        if advantaged == disadvantaged {
            return Err(Error::InvalidParameter(format!(
                "advantaged and disadvantaged levels of `{}` must differ",
                col.name
            )));
        }
        Ok(Self {
            column,
            advantaged,
            disadvantaged,
        })
    }

    /// `levels[1]` against `levels[0]` for every sensitive column.
    pub fn defaults(schema: &Schema) -> Vec<GroupPair> {
        (0..schema.sensitive().len())
            .map(|c| GroupPair {
                column: c,
                advantaged: 1,
                disadvantaged: 0,
            })
            .collect()
    }

    pub fn describe(&self, schema: &Schema) -> String {
        let col = &schema.sensitive()[self.column];
        format!(
            "{}: {} vs {}",
            col.name, col.levels[self.advantaged], col.levels[self.disadvantaged]
        )
    }

    fn with(&self, s: &[usize], level: usize) -> Vec<usize> {
        let mut out = s.to_vec();
        out[self.column] = level;
        out
    }

    fn check(&self, schema: &Schema) -> Result<()> {
        Self::from_indices(schema, self.column, self.advantaged, self.disadvantaged).map(|_| ())
    }
}

/// Mean and sample standard deviation of a row-level quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, sd }
    }
}

fn check_input(p: &Predictor, test: &Dataset) -> Result<()> {
    p.ensure_schema(test.schema())?;
    if test.is_empty() {
        return Err(Error::InsufficientData("empty evaluation dataset".into()));
    }
    Ok(())
}

/// Row terms `score(adv, a_i) − score(dis, a_i)`.
pub fn eo_metric_terms(p: &Predictor, test: &Dataset, pair: &GroupPair) -> Result<Vec<f64>> {
    check_input(p, test)?;
    pair.check(test.schema())?;
    test.rows()
        .iter()
        .map(|r| {
            let hi = p.score(&pair.with(&r.sensitive, pair.advantaged), &r.attributes)?;
            let lo = p.score(&pair.with(&r.sensitive, pair.disadvantaged), &r.attributes)?;
            Ok(hi - lo)
        })
        .collect()
}

pub fn eo_metric(p: &Predictor, test: &Dataset, pair: &GroupPair) -> Result<f64> {
    Ok(Summary::of(&eo_metric_terms(p, test, pair)?).mean)
}

/// Row terms with each group's attributes moved along `g`.
pub fn aa_metric_terms(
    p: &Predictor,
    test: &Dataset,
    pair: &GroupPair,
    g: &AttributeRegression,
) -> Result<Vec<f64>> {
    check_input(p, test)?;
    pair.check(test.schema())?;
    let enc = Encoding::new(test.schema().clone());
    test.rows()
        .iter()
        .map(|r| {
            let s_adv = pair.with(&r.sensitive, pair.advantaged);
            let s_dis = pair.with(&r.sensitive, pair.disadvantaged);
            let a_adv = g.counterfactual(&enc, &r.attributes, &r.sensitive, &s_adv)?;
            let a_dis = g.counterfactual(&enc, &r.attributes, &r.sensitive, &s_dis)?;
            Ok(p.score(&s_adv, &a_adv)? - p.score(&s_dis, &a_dis)?)
        })
        .collect()
}

pub fn aa_metric(
    p: &Predictor,
    test: &Dataset,
    pair: &GroupPair,
    g: &AttributeRegression,
) -> Result<f64> {
    Ok(Summary::of(&aa_metric_terms(p, test, pair, g)?).mean)
}

fn histogram(values: &[f64], lo: f64, width: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![BIN_SMOOTHING; bins];
    for &v in values {
        let idx = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    counts.iter_mut().for_each(|c| *c /= total);
    counts
}

/// `KL(P‖Q) + KL(Q‖P)` between smoothed equal-width histograms over the
/// combined range of both samples.
pub fn symmetric_binned_kl(x: &[f64], y: &[f64], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::InsufficientData(
            "histogram of an empty sample".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "non-finite value in histogram input".into(),
        ));
    }
    let lo = x.iter().chain(y).copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().chain(y).copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(0.0);
    }
    let width = (hi - lo) / bins as f64;
    let p = histogram(x, lo, width, bins);
    let q = histogram(y, lo, width, bins);
    Ok(p.iter()
        .zip(&q)
        .map(|(a, b)| (a - b) * (a / b).ln())
        .sum::<f64>()
        .max(0.0))
}

pub fn demographic_parity_kl(
    p: &Predictor,
    test: &Dataset,
    pair: &GroupPair,
    bins: usize,
) -> Result<f64> {
    check_input(p, test)?;
    pair.check(test.schema())?;
    let scores = p.score_rows(test)?;
    let (mut adv, mut dis) = (Vec::new(), Vec::new());
    for (r, s) in test.rows().iter().zip(scores) {
        let level = r.sensitive[pair.column];
        if level == pair.advantaged {
            adv.push(s);
        } else if level == pair.disadvantaged {
            dis.push(s);
        }
    }
    if adv.is_empty() || dis.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no test rows for one side of {}",
            pair.describe(test.schema())
        )));
    }
    symmetric_binned_kl(&adv, &dis, bins)
}

/// Accuracy is higher-is-better; RMSE is lower-is-better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "measure", content = "value", rename_all = "snake_case")]
pub enum PredictiveScore {
    Accuracy(f64),
    Rmse(f64),
}

impl PredictiveScore {
    pub fn value(&self) -> f64 {
        match *self {
            PredictiveScore::Accuracy(v) | PredictiveScore::Rmse(v) => v,
        }
    }
}

pub fn predictive_score(p: &Predictor, test: &Dataset) -> Result<PredictiveScore> {
    check_input(p, test)?;
    let y = test.decisions()?;
    let scores = p.score_rows(test)?;
    let n = y.len() as f64;
    Ok(match test.schema().decision().kind {
        DecisionKind::Binary => {
            let hits = scores
                .iter()
                .zip(&y)
                .filter(|(s, y)| (**s >= 0.5) == (**y == 1.0))
                .count();
            PredictiveScore::Accuracy(hits as f64 / n)
        }
        DecisionKind::RealValued => {
            let sse: f64 = scores.iter().zip(&y).map(|(s, y)| (s - y).powi(2)).sum();
            PredictiveScore::Rmse((sse / n).sqrt())
        }
    })
}

fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    let q = q.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
}

/// `E_A Σ_s p(s) KL(Bern(ml(s, a)) ‖ Bern(p(s, a)))`, with `A` the test
/// attributes and `p(s)` the test sensitive frequencies.
pub fn avg_kl_to_ml(p: &Predictor, ml: &Predictor, test: &Dataset) -> Result<f64> {
    check_input(p, test)?;
    ml.ensure_schema(test.schema())?;
    if test.schema().decision().kind != DecisionKind::Binary {
        return Err(Error::Unsupported(
            "KL to the ML decision needs a binary decision".into(),
        ));
    }
    let p_s = fit_sensitive_distribution(test)?;
    let mut total = 0.0;
    for r in test.rows() {
        for (s, w) in p_s.iter() {
            total += w * bernoulli_kl(ml.score(s, &r.attributes)?, p.score(s, &r.attributes)?);
        }
    }
    Ok(total / test.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub eo_metric: f64,
    pub eo_sd: f64,
    pub aa_metric: f64,
    pub aa_sd: f64,
    pub sym_kl: f64,
    pub predictive: PredictiveScore,
}

impl MetricReport {
    pub fn compute(
        p: &Predictor,
        test: &Dataset,
        pair: &GroupPair,
        g: &AttributeRegression,
        bins: usize,
    ) -> Result<Self> {
        let eo = Summary::of(&eo_metric_terms(p, test, pair)?);
        let aa = Summary::of(&aa_metric_terms(p, test, pair, g)?);
        Ok(Self {
            eo_metric: eo.mean,
            eo_sd: eo.sd,
            aa_metric: aa.mean,
            aa_sd: aa.sd,
            sym_kl: demographic_parity_kl(p, test, pair, bins)?,
            predictive: predictive_score(p, test)?,
        })
    }
}

/// One block of the evaluation table: every predictor against one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub pair: String,
    pub rows: Vec<(PredictorKind, MetricReport)>,
}

impl PairTable {
    pub fn get(&self, kind: PredictorKind) -> Option<&MetricReport> {
        self.rows.iter().find(|(k, _)| *k == kind).map(|(_, r)| r)
    }

    /// Aligned text, values ×10² with one decimal.
    pub fn to_text(&self) -> String {
        let measure = match self.rows.first().map(|(_, r)| r.predictive) {
            Some(PredictiveScore::Rmse(_)) => "RMSE (lower is better)",
            _ => "accuracy",
        };
        let mut out = String::new();
        let _ = writeln!(out, "# {} (x10^-2, Prediction = {measure})", self.pair);
        let _ = writeln!(
            out,
            "{:<6} {:>8} {:>8} {:>8} {:>11}",
            "", "EO", "AA", "KL", "Prediction"
        );
        // Round first so tiny negatives do not print as -0.0.
        let pct = |x: f64| (1000.0 * x).round() / 10.0 + 0.0;
        for (kind, r) in &self.rows {
            let _ = writeln!(
                out,
                "{:<6} {:>8.1} {:>8.1} {:>8.1} {:>11.1}",
                kind.label(),
                pct(r.eo_metric),
                pct(r.aa_metric),
                pct(r.sym_kl),
                pct(r.predictive.value())
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm_sim::{admissions_schema, simulate, ScmParams, SimSpec};

    #[test]
    fn kl_of_equal_samples_is_zero() {
        let x = [0.1, 0.2, 0.3, 0.9];
        assert_eq!(symmetric_binned_kl(&x, &x, 20).unwrap(), 0.0);
        let mut y = x;
        y.reverse();
        assert_eq!(symmetric_binned_kl(&x, &y, 20).unwrap(), 0.0);
        assert_eq!(symmetric_binned_kl(&[0.5], &[0.5, 0.5], 20).unwrap(), 0.0);
    }

    #[test]
    fn kl_matches_hand_computation() {
        // Two bins; x all in bin 0, y split evenly.
        let x = [0.0, 0.0];
        let y = [0.0, 1.0];
        let e = BIN_SMOOTHING;
        let p = [(2.0 + e) / (2.0 + 2.0 * e), e / (2.0 + 2.0 * e)];
        let q = [(1.0 + e) / (2.0 + 2.0 * e), (1.0 + e) / (2.0 + 2.0 * e)];
        let want: f64 = (0..2).map(|i| (p[i] - q[i]) * (p[i] / q[i]).ln()).sum();
        assert!((symmetric_binned_kl(&x, &y, 2).unwrap() - want).abs() < 1e-12);
        assert!(symmetric_binned_kl(&x, &y, 1).is_err());
        assert!(symmetric_binned_kl(&[], &y, 2).is_err());
    }

    #[test]
    fn bernoulli_kl_properties() {
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        assert!(bernoulli_kl(0.3, 0.6) > 0.0);
        assert!(bernoulli_kl(1.0, 0.0).is_finite());
        let want = 0.2 * (0.2f64 / 0.5).ln() + 0.8 * (0.8f64 / 0.5).ln();
        assert!((bernoulli_kl(0.2, 0.5) - want).abs() < 1e-15);
    }

    #[test]
    fn summary_uses_sample_sd() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.sd - 1.0).abs() < 1e-15);
        assert_eq!(Summary::of(&[4.0]).sd, 0.0);
    }

    #[test]
    fn group_pair_validation() {
        let schema = admissions_schema();
        let pair = GroupPair::new(&schema, "sex", "m", "f").unwrap();
        assert_eq!(
            (pair.column, pair.advantaged, pair.disadvantaged),
            (0, 1, 0)
        );
        assert!(GroupPair::new(&schema, "sex", "m", "m").is_err());
        assert!(GroupPair::new(&schema, "sex", "m", "x").is_err());
        assert!(GroupPair::new(&schema, "score", "m", "f").is_err());
        assert_eq!(pair.describe(&schema), "sex: m vs f");
    }

    #[test]
    fn metrics_are_row_permutation_invariant() {
        let data = simulate(&SimSpec {
            params: ScmParams::default(),
            n: 400,
            seed: 5,
        })
        .unwrap();
        let set = crate::predictors::PredictorSet::fit(&data).unwrap();
        let pair = GroupPair::new(data.schema(), "sex", "m", "f").unwrap();
        let rev: Vec<usize> = (0..data.len()).rev().collect();
        let flipped = data.select(&rev);
        let ml = set.get(PredictorKind::Ml);
        let g = set.components.g();
        let a = MetricReport::compute(ml, &data, &pair, g, 20).unwrap();
        let b = MetricReport::compute(ml, &flipped, &pair, g, 20).unwrap();
        assert!((a.eo_metric - b.eo_metric).abs() < 1e-12);
        assert!((a.aa_metric - b.aa_metric).abs() < 1e-12);
        assert!((a.sym_kl - b.sym_kl).abs() < 1e-12);
        assert_eq!(a.predictive, b.predictive);
    }
}
