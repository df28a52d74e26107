//! Synthetic admissions data from the linear-logistic structural model
//!
//! ```text
//! s ~ Bernoulli(p_male)
//! a = clamp(lambda * s + eps, 0, 1),   eps ~ Uniform[0, 1)
//! y ~ Bernoulli(sigmoid(intercept + beta_a * a + beta_s * s))
//! ```
//!
//! Scores are stored normalized to `[0, 1]`; a shift of `lambda = 0.02`
//! corresponds to two points on a 0–100 test scale.
//!
//! Randomness comes from ChaCha8 seeded with [`SeedableRng::seed_from_u64`].
//! Sweep replicates get sub-seeds from [`derive_seed`], a SplitMix64 mix of
//! the base seed and the cell index, so every cell is reproducible on its own.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    AttrValue, AttributeColumn, Dataset, DecisionColumn, DecisionKind, Record, Schema,
    SensitiveColumn,
};
use crate::error::{Error, Result};

pub const SEX_COLUMN: &str = "sex";
pub const SCORE_COLUMN: &str = "score";
pub const ADMIT_COLUMN: &str = "admit";

/// Level index of the female group.
pub const FEMALE: usize = 0;
/// Level index of the male group.
pub const MALE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScmParams {
    pub beta_a: f64,
    pub beta_s: f64,
    /// Score advantage of the male group, in normalized score units.
    pub lambda: f64,
    pub intercept: f64,
    pub p_male: f64,
}

impl Default for ScmParams {
    fn default() -> Self {
        Self {
            beta_a: 2.0,
            beta_s: 1.0,
            lambda: 0.02,
            intercept: -1.0,
            p_male: 0.5,
        }
    }
}

impl ScmParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.beta_a,
            self.beta_s,
            self.lambda,
            self.intercept,
            self.p_male,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "all structural parameters must be finite".into(),
            ));
        }
        if !(self.p_male > 0.0 && self.p_male < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p_male must lie in (0, 1), got {}",
                self.p_male
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// `E[a | s]` under the clamped uniform score model.
    pub fn mean_score(&self, s: usize) -> f64 {
        let shift = self.lambda * s as f64;
        // E[min(shift + U, 1)] for shift in [0, 1]
        shift + 0.5 - shift * shift / 2.0
    }

    pub fn admit_probability(&self, s: usize, a: f64) -> f64 {
        sigmoid(self.intercept + self.beta_a * a + self.beta_s * s as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub params: ScmParams,
    pub n: usize,
    pub seed: u64,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Schema of simulated data: `sex ∈ {f, m}`, correctable numeric `score`,
/// binary `admit`.
pub fn admissions_schema() -> Arc<Schema> {
    Arc::new(
        Schema::new(
            vec![SensitiveColumn {
                name: SEX_COLUMN.into(),
                levels: vec!["f".into(), "m".into()],
            }],
            vec![AttributeColumn::numeric(SCORE_COLUMN, true)],
            DecisionColumn {
                name: ADMIT_COLUMN.into(),
                kind: DecisionKind::Binary,
            },
        )
        .expect("static schema is valid"),
    )
}

pub fn simulate(spec: &SimSpec) -> Result<Dataset> {
    spec.params.validate()?;
    if spec.n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let p = &spec.params;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = (0..spec.n)
        .map(|_| {
            let s = usize::from(rng.gen::<f64>() < p.p_male);
            let eps: f64 = rng.gen();
            let a = (p.lambda * s as f64 + eps).min(1.0).max(0.0);
            let y = if rng.gen::<f64>() < p.admit_probability(s, a) {
                1.0
            } else {
                0.0
            };
            Record {
                sensitive: vec![s],
                attributes: vec![AttrValue::Num(a)],
                decision: Some(y),
            }
        })
        .collect();
    Dataset::new(admissions_schema(), rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    BetaS,
    Lambda,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::BetaS => "beta_s",
            SweepParam::Lambda => "lambda",
        }
    }

    pub fn apply(&self, base: &ScmParams, value: f64) -> ScmParams {
        let mut p = *base;
        match self {
            SweepParam::BetaS => p.beta_s = value,
            SweepParam::Lambda => p.lambda = value,
        }
        p
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "beta_s" => Ok(SweepParam::BetaS),
            "lambda" => Ok(SweepParam::Lambda),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep parameter `{other}` (expected beta_s or lambda)"
            ))),
        }
    }
}

/// SplitMix64 finalizer applied to `seed + (index + 1) * golden_gamma`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One spec per (grid value, replicate), grid-major. Cell `k` gets
/// `derive_seed(seed, k)`.
pub fn sweep(
    base: &ScmParams,
    vary: SweepParam,
    grid: &[f64],
    replicates: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<SimSpec>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if replicates == 0 {
        return Err(Error::InvalidParameter(
            "replicates must be at least 1".into(),
        ));
    }
    let mut specs = Vec::with_capacity(grid.len() * replicates);
    for &value in grid {
        let params = vary.apply(base, value);
        params.validate()?;
        for _ in 0..replicates {
            let k = specs.len() as u64;
            specs.push(SimSpec {
                params,
                n,
                seed: derive_seed(seed, k),
            });
        }
    }
    Ok(specs)
}
