mod common;

use std::sync::Arc;

use fairadjust::domain::{
    AttrValue, AttributeColumn, DecisionColumn, DecisionKind, Encoding, Schema, SensitiveColumn,
};
use fairadjust::metrics::{self, GroupPair};
use fairadjust::predictors::{PredictorKind, PredictorSet};
use proptest::prelude::*;

fn schema(k1: usize, k2: usize, kc: usize) -> Arc<Schema> {
    let lv = |p: &str, k: usize| (0..k).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    Arc::new(
        Schema::new(
            vec![
                SensitiveColumn {
                    name: "s".into(),
                    levels: lv("s", k1),
                },
                SensitiveColumn {
                    name: "t".into(),
                    levels: lv("t", k2),
                },
            ],
            vec![
                AttributeColumn::numeric("x", true),
                AttributeColumn::categorical("c", lv("c", kc)),
            ],
            DecisionColumn {
                name: "y".into(),
                kind: DecisionKind::Binary,
            },
        )
        .unwrap(),
    )
}

proptest! {
    #[test]
    fn encoding_is_injective(
        (k1, k2, kc) in (2usize..5, 2usize..4, 2usize..5),
        a in (0usize..5, 0usize..4, -5.0f64..5.0, 0usize..5),
        b in (0usize..5, 0usize..4, -5.0f64..5.0, 0usize..5),
    ) {
        let enc = Encoding::new(schema(k1, k2, kc));
        let clamp = |(s, t, x, c): (usize, usize, f64, usize)| (vec![s % k1, t % k2], vec![AttrValue::Num(x), AttrValue::Level(c % kc)]);
        let (sa, aa) = clamp(a);
        let (sb, ab) = clamp(b);
        let ea = enc.encode(&sa, &aa).unwrap();
        let eb = enc.encode(&sb, &ab).unwrap();
        prop_assert_eq!(ea.len(), enc.feature_count());
        prop_assert_eq!(ea == eb, sa == sb && aa == ab);
        prop_assert_eq!(enc.decode_sensitive(&ea[..enc.sensitive_width()]).unwrap(), sa);
    }

    #[test]
    fn encoding_width_formula(k1 in 2usize..6, k2 in 2usize..6, kc in 2usize..6) {
        let enc = Encoding::new(schema(k1, k2, kc));
        prop_assert_eq!(enc.sensitive_width(), (k1 - 1) + (k2 - 1));
        prop_assert_eq!(enc.feature_count(), (k1 - 1) + (k2 - 1) + 1 + (kc - 1));
    }
}

#[test]
fn identities_hold_on_random_shapes() {
    for seed in 0..12 {
        let data = common::random_dataset(1000 + seed);
        let set = PredictorSet::fit(&data).unwrap();
        let g = set.components.g();
        for pair in GroupPair::defaults(data.schema()) {
            for kind in [PredictorKind::Eo, PredictorKind::Ftu] {
                let v = metrics::eo_metric(set.get(kind), &data, &pair).unwrap();
                assert!(v.abs() <= 1e-12, "seed {seed} {kind}: eo {v}");
            }
            for kind in [PredictorKind::Aa, PredictorKind::FairLearning] {
                let v = metrics::aa_metric(set.get(kind), &data, &pair, g).unwrap();
                assert!(v.abs() <= 1e-12, "seed {seed} {kind}: aa {v}");
            }
        }
    }
}

#[test]
fn scores_are_probabilities() {
    let data = common::random_dataset(77);
    let set = PredictorSet::fit(&data).unwrap();
    for kind in PredictorKind::ALL {
        for s in set.get(kind).score_rows(&data).unwrap() {
            assert!((0.0..=1.0).contains(&s), "{kind}: {s}");
        }
    }
}

#[test]
fn kl_to_ml_is_zero_for_ml_and_positive_otherwise() {
    let data = common::random_dataset(5);
    let set = PredictorSet::fit(&data).unwrap();
    let ml = set.get(PredictorKind::Ml);
    assert_eq!(metrics::avg_kl_to_ml(ml, ml, &data).unwrap(), 0.0);
    for kind in [PredictorKind::Eo, PredictorKind::Ftu, PredictorKind::Aa] {
        assert!(metrics::avg_kl_to_ml(set.get(kind), ml, &data).unwrap() >= 0.0);
    }
}
