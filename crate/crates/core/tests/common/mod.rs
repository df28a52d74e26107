//! Synthetic data shared by the integration suites.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::sync::Arc;

use fairadjust::domain::{
    AttrValue, AttributeColumn, Dataset, DecisionColumn, DecisionKind, Record, Schema,
    SensitiveColumn,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn levels(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

/// A dataset of random shape: one or two sensitive columns with two or
/// three levels, one or two correctable numeric columns shifted by group,
/// optionally a plain numeric and a categorical column, and a binary
/// logistic decision.
pub fn random_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_sens = rng.gen_range(1..=2);
    let sens: Vec<SensitiveColumn> = (0..n_sens)
        .map(|i| SensitiveColumn {
            name: format!("s{i}"),
            levels: levels("l", rng.gen_range(2..=3)),
        })
        .collect();
    let n_corr = rng.gen_range(1..=2);
    let extra_num = rng.gen_bool(0.5);
    let categorical = rng.gen_bool(0.5);
    let mut attrs: Vec<AttributeColumn> = (0..n_corr)
        .map(|j| AttributeColumn::numeric(format!("c{j}"), true))
        .collect();
    if extra_num {
        attrs.push(AttributeColumn::numeric("x", false));
    }
    if categorical {
        attrs.push(AttributeColumn::categorical("k", levels("k", 3)));
    }
    let schema = Arc::new(
        Schema::new(
            sens.clone(),
            attrs,
            DecisionColumn {
                name: "y".into(),
                kind: DecisionKind::Binary,
            },
        )
        .unwrap(),
    );

    let shifts: Vec<Vec<Vec<f64>>> = (0..n_corr)
        .map(|_| {
            sens.iter()
                .map(|c| {
                    (0..c.levels.len())
                        .map(|_| rng.gen_range(-0.3..0.3))
                        .collect()
                })
                .collect()
        })
        .collect();
    let w_s: Vec<Vec<f64>> = sens
        .iter()
        .map(|c| {
            (0..c.levels.len())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let w_a: Vec<f64> = (0..n_corr + 2).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let n = rng.gen_range(300..=600);
    let rows = (0..n)
        .map(|_| {
            let s: Vec<usize> = sens
                .iter()
                .map(|c| rng.gen_range(0..c.levels.len()))
                .collect();
            let mut a = Vec::new();
            let mut eta = rng.gen_range(-0.3..0.3);
            for (c, &l) in s.iter().enumerate() {
                eta += w_s[c][l];
            }
            for (j, shift) in shifts.iter().enumerate() {
                let v =
                    rng.gen::<f64>() + s.iter().enumerate().map(|(c, &l)| shift[c][l]).sum::<f64>();
                eta += w_a[j] * v;
                a.push(AttrValue::Num(v));
            }
            if extra_num {
                let v: f64 = rng.gen_range(-1.0..1.0);
                eta += w_a[n_corr] * v;
                a.push(AttrValue::Num(v));
            }
            if categorical {
                let k = rng.gen_range(0..3);
                eta += w_a[n_corr + 1] * (k as f64 - 1.0);
                a.push(AttrValue::Level(k));
            }
            let y = if rng.gen::<f64>() < sigmoid(eta) {
                1.0
            } else {
                0.0
            };
            Record {
                sensitive: s,
                attributes: a,
                decision: Some(y),
            }
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

/// Headed CSV in the layout `configs/adult.toml` expects.
pub fn adult_like_csv(seed: u64, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let races = [
        "White",
        "Black",
        "Asian-Pac-Islander",
        "Amer-Indian-Eskimo",
        "Other",
    ];
    let marital = ["Married-civ-spouse", "Never-married", "Divorced"];
    let mut out = String::from(
        "age,workclass,fnlwgt,education,educational-num,marital-status,occupation,relationship,race,gender,\
         capital-gain,capital-loss,hours-per-week,native-country,income\n",
    );
    for _ in 0..n {
        let male = rng.gen_bool(0.67);
        let race = if rng.gen_bool(0.8) {
            0
        } else {
            rng.gen_range(1..races.len())
        };
        let age = rng.gen_range(17..80);
        let edu =
            (rng.gen_range(1..=16) + if male { 1 } else { 0 } + if race == 0 { 1 } else { 0 })
                .min(16);
        let hours = (rng.gen_range(20..60) + if male { 6 } else { 0 }) as f64;
        let gain = if rng.gen_bool(0.1) {
            rng.gen_range(1000..20000)
        } else {
            0
        };
        let m = rng.gen_range(0..marital.len());
        let eta = -6.0
            + 0.25 * edu as f64
            + 0.04 * hours
            + 0.03 * age as f64
            + if male { 0.8 } else { 0.0 }
            + if race == 0 { 0.4 } else { 0.0 }
            + if m == 0 { 1.0 } else { 0.0 }
            + gain as f64 / 10000.0;
        let income = if rng.gen::<f64>() < sigmoid(eta) {
            ">50K"
        } else {
            "<=50K"
        };
        let _ = writeln!(
            out,
            "{age}, Private,{},Bachelors,{edu},{},Sales,Husband,{},{},{gain},0,{hours},United-States,{income}",
            rng.gen_range(10000..500000),
            marital[m],
            races[race],
            if male { "Male" } else { "Female" }
        );
    }
    out
}

/// Headed CSV in the layout `configs/compas.toml` expects.
pub fn compas_like_csv(seed: u64, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let races = ["African-American", "Caucasian", "Hispanic", "Other"];
    let mut out = String::from("id,sex,age,race,juv_fel_count,juv_misd_count,priors_count,c_charge_degree,decile_score,two_year_recid\n");
    for i in 0..n {
        let male = rng.gen_bool(0.8);
        let race = rng.gen_range(0..races.len());
        let age = rng.gen_range(18..70);
        let bump = if race == 0 { 2 } else { 0 } + if male { 1 } else { 0 };
        let priors = rng.gen_range(0..6) + rng.gen_range(0..=bump);
        let fel = if rng.gen_bool(0.1 + 0.05 * bump as f64) {
            rng.gen_range(1..3)
        } else {
            0
        };
        let misd = if rng.gen_bool(0.1) { 1 } else { 0 };
        let degree = if rng.gen_bool(0.6) { "F" } else { "M" };
        let score = (1.0 + 0.6 * priors as f64 + 1.2 * fel as f64 + 0.5 * misd as f64
            - 0.05 * (age - 18) as f64
            + 0.8 * bump as f64
            + rng.gen_range(0.0..3.0))
        .clamp(1.0, 10.0)
        .round();
        let _ = writeln!(
            out,
            "{i},{},{age},{},{fel},{misd},{priors},{degree},{score},{}",
            if male { "Male" } else { "Female" },
            races[race],
            u8::from(rng.gen_bool(0.4))
        );
    }
    out
}

/// Space-separated, headerless rows in the coded layout
/// `configs/german.toml` expects.
pub fn german_like_data(seed: u64, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let status = ["A91", "A92", "A93", "A94", "A95"];
    let mut out = String::new();
    for _ in 0..n {
        let ps = rng.gen_range(0..status.len());
        let male = matches!(ps, 0 | 2 | 3);
        let single = matches!(ps, 2 | 4);
        let duration = rng.gen_range(6..48) + if male { 0 } else { 4 } + if single { 3 } else { 0 };
        let amount = rng.gen_range(500..10000) + if male { 800 } else { 0 };
        let history = format!("A3{}", rng.gen_range(0..5));
        let savings = format!("A6{}", rng.gen_range(1..6));
        let employment = format!("A7{}", rng.gen_range(1..6));
        let age = rng.gen_range(19..75);
        let eta = 1.2 - 0.03 * duration as f64 - 0.00005 * amount as f64
            + 0.01 * age as f64
            + if male { 0.3 } else { 0.0 }
            - if single { 0.3 } else { 0.0 };
        let good = if rng.gen::<f64>() < sigmoid(eta) {
            1
        } else {
            2
        };
        let _ = writeln!(
            out,
            "A11 {duration} {history} A43 {amount} {savings} {employment} 4 {} A101 4 A121 {age} A143 A152 2 A173 1 A192 A201 {good}",
            status[ps]
        );
    }
    out
}

pub fn config_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}
