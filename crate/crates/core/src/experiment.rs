//! End-to-end recipes: fit-and-evaluate, the three-applicant admissions
//! table, and parameter sweeps over the simulator.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{AttrValue, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{
    AttributeRegression, FeatureModel, FittedComponents, GlmModel, LinearFit, Link,
    SensitiveDistribution,
};
use crate::metrics::{self, GroupPair, MetricReport, PairTable, Summary};
use crate::predictors::{PredictorKind, PredictorSet};
use crate::scm_sim::{self, admissions_schema, ScmParams, SimSpec, SweepParam, FEMALE, MALE};

/// Components built from the generating coefficients instead of data.
pub fn true_components(params: &ScmParams) -> Result<Arc<FittedComponents>> {
    params.validate()?;
    let f_ml = FeatureModel {
        features: vec![0, 1],
        glm: GlmModel::fixed(
            Link::Logistic,
            params.intercept,
            vec![params.beta_s, params.beta_a],
        )?,
    };
    let p_s = SensitiveDistribution::from_weights(vec![
        (vec![FEMALE], 1.0 - params.p_male),
        (vec![MALE], params.p_male),
    ])?;
    let g0 = params.mean_score(FEMALE);
    let g = AttributeRegression {
        fits: vec![LinearFit {
            target: 0,
            model: FeatureModel {
                features: vec![0],
                glm: GlmModel::fixed(Link::Identity, g0, vec![params.mean_score(MALE) - g0])?,
            },
        }],
    };
    Ok(Arc::new(FittedComponents::from_parts(
        admissions_schema(),
        f_ml,
        p_s,
        g,
    )?))
}

/// Every predictor against every pair, reported in table order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub tables: Vec<PairTable>,
}

impl Evaluation {
    pub fn to_text(&self) -> String {
        self.tables
            .iter()
            .map(PairTable::to_text)
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "pair,predictor,eo_metric,eo_sd,aa_metric,aa_sd,sym_kl,prediction_measure,prediction\n",
        );
        for t in &self.tables {
            for (kind, r) in &t.rows {
                let measure = match r.predictive {
                    metrics::PredictiveScore::Accuracy(_) => "accuracy",
                    metrics::PredictiveScore::Rmse(_) => "rmse",
                };
                let _ = writeln!(
                    out,
                    "\"{}\",{},{},{},{},{},{},{},{}",
                    t.pair,
                    kind.key(),
                    r.eo_metric,
                    r.eo_sd,
                    r.aa_metric,
                    r.aa_sd,
                    r.sym_kl,
                    measure,
                    r.predictive.value()
                );
            }
        }
        out
    }
}

pub fn evaluate(
    set: &PredictorSet,
    test: &Dataset,
    pairs: &[GroupPair],
    bins: usize,
) -> Result<Evaluation> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no group pairs to evaluate".into()));
    }
    let g = set.components.g();
    let tables = pairs
        .iter()
        .map(|pair| {
            let rows = PredictorKind::ALL
                .par_iter()
                .map(|&kind| {
                    Ok((
                        kind,
                        MetricReport::compute(set.get(kind), test, pair, g, bins)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PairTable {
                pair: pair.describe(test.schema()),
                rows,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation { tables })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Applicant {
    pub label: char,
    pub sex: usize,
    pub score: f64,
}

pub const APPLICANTS: [Applicant; 3] = [
    Applicant {
        label: 'A',
        sex: FEMALE,
        score: 0.85,
    },
    Applicant {
        label: 'B',
        sex: MALE,
        score: 0.85,
    },
    Applicant {
        label: 'C',
        sex: FEMALE,
        score: 0.65,
    },
];

/// Published `(ml, eo, aa)` probabilities for applicants A, B, C.
pub const PUBLISHED: [[f64; 3]; 3] = [[0.67, 0.77, 0.78], [0.84, 0.77, 0.76], [0.57, 0.69, 0.70]];

pub const TABLE1_N: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicantRow {
    pub applicant: Applicant,
    /// `(ml, eo, aa)`.
    pub scores: [f64; 3],
    pub published: [f64; 3],
    pub deviation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub seed: u64,
    pub n: usize,
    pub true_params: bool,
    pub rows: Vec<ApplicantRow>,
}

impl Table1 {
    pub fn max_deviation(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.deviation)
            .fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mode = if self.true_params {
            "generating parameters"
        } else {
            "fitted"
        };
        let mut out = String::new();
        let _ = writeln!(out, "# n = {}, seed = {}, {mode}", self.n, self.seed);
        let _ = writeln!(
            out,
            "{:<9} {:>3} {:>5}  {:>6} {:>6} {:>6}  {:>6} {:>6} {:>6}  {:>6} {:>6} {:>6}",
            "applicant",
            "sex",
            "score",
            "y_ml",
            "y_eo",
            "y_aa",
            "pub_ml",
            "pub_eo",
            "pub_aa",
            "d_ml",
            "d_eo",
            "d_aa"
        );
        let schema = admissions_schema();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<9} {:>3} {:>5.2}  {:>6.3} {:>6.3} {:>6.3}  {:>6.2} {:>6.2} {:>6.2}  {:>6.3} {:>6.3} {:>6.3}",
                r.applicant.label,
                schema.sensitive()[0].levels[r.applicant.sex],
                r.applicant.score,
                r.scores[0],
                r.scores[1],
                r.scores[2],
                r.published[0],
                r.published[1],
                r.published[2],
                r.deviation[0],
                r.deviation[1],
                r.deviation[2]
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("applicant,sex,score,predictor,value,published,deviation\n");
        let schema = admissions_schema();
        for r in &self.rows {
            for (j, kind) in ["ml", "eo", "aa"].iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.applicant.label,
                    schema.sensitive()[0].levels[r.applicant.sex],
                    r.applicant.score,
                    kind,
                    r.scores[j],
                    r.published[j],
                    r.deviation[j]
                );
            }
        }
        out
    }
}

/// Scores the three applicants with components fitted on `n` simulated
/// rows, or with the generating coefficients when `true_params` is set.
pub fn table1(seed: u64, n: usize, true_params: bool) -> Result<Table1> {
    let params = ScmParams::default();
    let components = if true_params {
        true_components(&params)?
    } else {
        let data = scm_sim::simulate(&SimSpec { params, n, seed })?;
        Arc::new(FittedComponents::fit(&data)?)
    };
    let mut rows = Vec::with_capacity(APPLICANTS.len());
    for (applicant, published) in APPLICANTS.iter().zip(PUBLISHED) {
        let s = [applicant.sex];
        let a = [AttrValue::Num(applicant.score)];
        let scores = [
            crate::predictors::score_ml(&components, &s, &a)?,
            crate::predictors::score_eo(&components, &a)?,
            crate::predictors::score_aa(&components, &s, &a)?,
        ];
        let deviation = [0, 1, 2].map(|j| (scores[j] - published[j]).abs());
        rows.push(ApplicantRow {
            applicant: *applicant,
            scores,
            published,
            deviation,
        });
    }
    Ok(Table1 {
        seed,
        n,
        true_params,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: ScmParams,
    pub param: SweepParam,
    pub grid: Vec<f64>,
    pub replicates: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl SweepConfig {
    pub fn beta_s(seed: u64) -> Self {
        Self {
            base: ScmParams::default(),
            param: SweepParam::BetaS,
            grid: (0..=5).map(f64::from).collect(),
            replicates: 10,
            n_train: 5000,
            n_test: 5000,
            seed,
        }
    }

    pub fn lambda(seed: u64) -> Self {
        Self {
            param: SweepParam::Lambda,
            grid: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            ..Self::beta_s(seed)
        }
    }

    pub fn default_for(param: SweepParam, seed: u64) -> Self {
        match param {
            SweepParam::BetaS => Self::beta_s(seed),
            SweepParam::Lambda => Self::lambda(seed),
        }
    }
}

pub const SWEEP_METRICS: [&str; 4] = ["accuracy", "eo_metric", "aa_metric", "kl_to_ml"];

/// Metric values of one replicate, indexed like `PredictorKind::ALL` and
/// `SWEEP_METRICS`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub value: f64,
    pub replicate: usize,
    pub seed: u64,
    pub result: std::result::Result<Vec<[f64; 4]>, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub varied_param: String,
    pub value: f64,
    pub predictor: PredictorKind,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub value: f64,
    pub replicate: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub records: Vec<SweepRecord>,
    pub failures: Vec<SweepFailure>,
}

impl SweepResult {
    pub fn get(&self, value: f64, predictor: PredictorKind, metric: &str) -> Option<&SweepRecord> {
        self.records
            .iter()
            .find(|r| r.value == value && r.predictor == predictor && r.metric == metric)
    }

    /// Long format; `n` counts the replicates that succeeded.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("varied_param,value,predictor,metric,mean,sd,n\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.varied_param,
                r.value,
                r.predictor.key(),
                r.metric,
                r.mean,
                r.sd,
                r.n
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} sweep, {} replicates, n_train = {}, n_test = {}, seed = {}",
            self.config.param.name(),
            self.config.replicates,
            self.config.n_train,
            self.config.n_test,
            self.config.seed
        );
        let _ = write!(out, "{:>7} {:<10}", self.config.param.name(), "metric");
        for k in PredictorKind::ALL {
            let _ = write!(out, " {:>16}", k.label());
        }
        out.push('\n');
        for &value in &self.config.grid {
            for metric in SWEEP_METRICS {
                let _ = write!(out, "{value:>7.2} {metric:<10}");
                for k in PredictorKind::ALL {
                    match self.get(value, k, metric) {
                        Some(r) => {
                            let _ = write!(out, " {:>8.4}±{:<7.4}", r.mean, r.sd);
                        }
                        None => {
                            let _ = write!(out, " {:>16}", "failed");
                        }
                    }
                }
                out.push('\n');
            }
        }
        for f in &self.failures {
            let _ = writeln!(
                out,
                "! {} = {}, replicate {}: {}",
                self.config.param.name(),
                f.value,
                f.replicate,
                f.error
            );
        }
        out
    }
}

fn run_cell(spec: &SimSpec, n_train: usize) -> Result<Vec<[f64; 4]>> {
    let data = scm_sim::simulate(spec)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    let (train_idx, test_idx) = idx.split_at(n_train);
    let (train, test) = (data.select(train_idx), data.select(test_idx));
    let set = PredictorSet::fit(&train)?;
    let pair = GroupPair::new(test.schema(), scm_sim::SEX_COLUMN, "m", "f")?;
    let g = set.components.g();
    let ml = set.get(PredictorKind::Ml);
    PredictorKind::ALL
        .iter()
        .map(|&k| {
            let p = set.get(k);
            Ok([
                metrics::predictive_score(p, &test)?.value(),
                metrics::eo_metric(p, &test, &pair)?,
                metrics::aa_metric(p, &test, &pair, g)?,
                metrics::avg_kl_to_ml(p, ml, &test)?,
            ])
        })
        .collect()
}

/// Runs every (grid value, replicate) cell in parallel. Cell failures are
/// recorded, not propagated.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.n_train == 0 || cfg.n_test == 0 {
        return Err(Error::InvalidParameter(
            "n_train and n_test must be positive".into(),
        ));
    }
    let specs = scm_sim::sweep(
        &cfg.base,
        cfg.param,
        &cfg.grid,
        cfg.replicates,
        cfg.n_train + cfg.n_test,
        cfg.seed,
    )?;
    let outcomes: Vec<CellOutcome> = specs
        .par_iter()
        .enumerate()
        .map(|(k, spec)| CellOutcome {
            value: cfg.grid[k / cfg.replicates],
            replicate: k % cfg.replicates,
            seed: spec.seed,
            result: run_cell(spec, cfg.n_train).map_err(|e| e.to_string()),
        })
        .collect();

    let mut failures = Vec::new();
    let mut by_value: BTreeMap<usize, Vec<&Vec<[f64; 4]>>> = BTreeMap::new();
    for (k, o) in outcomes.iter().enumerate() {
        match &o.result {
            Ok(v) => by_value.entry(k / cfg.replicates).or_default().push(v),
            Err(e) => failures.push(SweepFailure {
                value: o.value,
                replicate: o.replicate,
                seed: o.seed,
                error: e.clone(),
            }),
        }
    }
    let mut records = Vec::new();
    for (gi, cells) in by_value {
        for (pi, &kind) in PredictorKind::ALL.iter().enumerate() {
            for (mi, metric) in SWEEP_METRICS.iter().enumerate() {
                let values: Vec<f64> = cells.iter().map(|c| c[pi][mi]).collect();
                let s = Summary::of(&values);
                records.push(SweepRecord {
                    varied_param: cfg.param.name().to_string(),
                    value: cfg.grid[gi],
                    predictor: kind,
                    metric: metric.to_string(),
                    mean: s.mean,
                    sd: s.sd,
                    n: values.len(),
                });
            }
        }
    }
    Ok(SweepResult {
        config: cfg.clone(),
        records,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn true_parameter_table() {
        let t = table1(1, TABLE1_N, true).unwrap();
        let sig = scm_sim::sigmoid;
        let gap = 0.02 - 0.02f64.powi(2) / 2.0;
        let feo = |a: f64| 0.5 * sig(-1.0 + 2.0 * a) + 0.5 * sig(2.0 * a);
        let want_c = 0.5 * feo(0.65) + 0.5 * feo(0.65 + gap);
        assert!((t.rows[1].scores[0] - sig(1.7)).abs() < 1e-12);
        assert!((t.rows[0].scores[1] - feo(0.85)).abs() < 1e-12);
        assert!((t.rows[2].scores[2] - want_c).abs() < 1e-12);
        assert_eq!(t.rows[0].scores[1], t.rows[1].scores[1]);
        assert!(t.to_text().contains("generating parameters"));
        assert_eq!(t.to_csv().lines().count(), 10);
    }

    #[test]
    fn tiny_sweep_shape() {
        let cfg = SweepConfig {
            grid: vec![0.0, 2.0],
            replicates: 2,
            n_train: 400,
            n_test: 300,
            ..SweepConfig::beta_s(4)
        };
        let r = run_sweep(&cfg).unwrap();
        assert!(r.failures.is_empty());
        assert_eq!(r.records.len(), 2 * 5 * SWEEP_METRICS.len());
        assert!(r.records.iter().all(|x| x.sd >= 0.0 && x.n == 2));
        assert_eq!(run_sweep(&cfg).unwrap(), r);
        assert_eq!(
            r.to_csv().lines().next().unwrap(),
            "varied_param,value,predictor,metric,mean,sd,n"
        );
    }

    #[test]
    fn failed_cells_are_recorded() {
        let cfg = SweepConfig {
            grid: vec![1.0],
            replicates: 2,
            n_train: 2,
            n_test: 5,
            ..SweepConfig::beta_s(4)
        };
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.failures.len(), 2);
        assert!(r.records.is_empty());
        assert!(r.to_text().contains("failed"));
    }
}
