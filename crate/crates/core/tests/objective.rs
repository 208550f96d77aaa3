use proptest::prelude::*;
use proptest::strategy::Strategy as Gen;
use riskmod::data::{CoarseLabel, Sample};
use riskmod::losses::{Label, LossKind, Probabilities, Tau};
use riskmod::objective::{apply_strategy, batch_loss, sample_loss, ObjectiveConfig, Strategy, TaggedSample, Target};

fn coarse() -> impl Gen<Value = CoarseLabel> {
    prop_oneof![
        Just(CoarseLabel::Negative),
        Just(CoarseLabel::Positive),
        Just(CoarseLabel::Uncertain)
    ]
}

fn dataset() -> impl Gen<Value = Vec<Sample>> {
    prop::collection::vec((coarse(), -3.0f64..3.0, -3.0f64..3.0), 0..40).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (c, x, y))| Sample::new(format!("s{i}"), vec![x, y], c))
            .collect()
    })
}

fn strategy() -> impl Gen<Value = Strategy> {
    prop::sample::select(Strategy::ALL.to_vec())
}

fn count(d: &[Sample], c: CoarseLabel) -> usize {
    d.iter().filter(|s| s.coarse == c).count()
}

proptest! {
    #[test]
    fn cardinality(d in dataset(), st in strategy()) {
        let out = apply_strategy(&d, &ObjectiveConfig::new(st)).unwrap();
        let expected = match st {
            Strategy::UIgnore | Strategy::PRm => d.len() - count(&d, CoarseLabel::Uncertain),
            _ => d.len(),
        };
        prop_assert_eq!(out.len(), expected);
    }

    #[test]
    fn risk_modulated_positives_never_use_ce(d in dataset()) {
        let out = apply_strategy(&d, &ObjectiveConfig::new(Strategy::PuRm)).unwrap();
        for t in &out {
            if t.target == Target::Class(Label::Positive) {
                prop_assert_eq!(t.loss, LossKind::Pce);
            } else {
                prop_assert_eq!(t.loss, LossKind::Ce);
            }
        }
    }

    #[test]
    fn u_ones_and_u_rm_share_labels(d in dataset()) {
        let ones = apply_strategy(&d, &ObjectiveConfig::new(Strategy::UOnes)).unwrap();
        let rm = apply_strategy(&d, &ObjectiveConfig::new(Strategy::URm)).unwrap();
        prop_assert_eq!(ones.len(), rm.len());
        for ((a, b), s) in ones.iter().zip(&rm).zip(&d) {
            prop_assert_eq!(a.target, b.target);
            prop_assert_eq!(&a.features, &b.features);
            let mapped = s.coarse == CoarseLabel::Uncertain;
            prop_assert_eq!(a.loss, LossKind::Ce);
            prop_assert_eq!(b.loss, if mapped { LossKind::Pce } else { LossKind::Ce });
        }
    }

    #[test]
    fn negatives_keep_ce_outside_uniform_mode(d in dataset(), st in strategy()) {
        prop_assume!(st != Strategy::UUniform);
        let out = apply_strategy(&d, &ObjectiveConfig::new(st)).unwrap();
        for t in out.iter().filter(|t| t.target == Target::Class(Label::Negative)) {
            prop_assert_eq!(t.loss, LossKind::Ce);
        }
    }

    #[test]
    fn batch_loss_is_permutation_invariant(
        rows in prop::collection::vec((coarse(), 0.001f64..0.999), 1..30),
        st in strategy(),
        rot in 0usize..30,
    ) {
        let d: Vec<Sample> = rows.iter().enumerate()
            .map(|(i, (c, _))| Sample::new(format!("s{i}"), vec![i as f64], *c)).collect();
        let cfg = ObjectiveConfig::new(st);
        let tagged = apply_strategy(&d, &cfg).unwrap();
        prop_assume!(!tagged.is_empty());
        let probs: Vec<Probabilities> = tagged.iter()
            .map(|t| Probabilities::from_positive(rows[t.features[0] as usize].1).unwrap())
            .collect();
        let a = batch_loss(&tagged, &probs, &cfg).unwrap();
        let k = rot % tagged.len();
        let mut t2 = tagged.clone();
        let mut p2 = probs.clone();
        t2.rotate_left(k);
        p2.rotate_left(k);
        t2.reverse();
        p2.reverse();
        let b = batch_loss(&t2, &p2, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn tau_near_one_matches_ce_on_confident_samples(s in 0.999f64..=1.0) {
        let t = TaggedSample { features: vec![0.0], target: Target::Class(Label::Positive), loss: LossKind::Pce };
        let ce = TaggedSample { loss: LossKind::Ce, ..t.clone() };
        let p = Probabilities::from_positive(s).unwrap();
        let rm = ObjectiveConfig::new(Strategy::PuRm).with_tau(Tau::new(0.999).unwrap());
        let ones = ObjectiveConfig::new(Strategy::UOnes);
        prop_assert!((sample_loss(&t, p, &rm) - sample_loss(&ce, p, &ones)).abs() < 1e-2);
    }

    #[test]
    fn lambda_scales_only_noise_terms(lambda in 0.0f64..5.0, p in 0.01f64..0.99) {
        let cfg = ObjectiveConfig { lambda, ..ObjectiveConfig::new(Strategy::UUniform) };
        let unit = ObjectiveConfig::new(Strategy::UUniform);
        let probs = Probabilities::from_positive(p).unwrap();
        let uc = TaggedSample { features: vec![], target: Target::Uniform, loss: LossKind::Uc };
        let pos = TaggedSample { features: vec![], target: Target::Class(Label::Positive), loss: LossKind::Pce };
        prop_assert_eq!(sample_loss(&uc, probs, &cfg), sample_loss(&uc, probs, &unit));
        prop_assert!((sample_loss(&pos, probs, &cfg) - lambda * sample_loss(&pos, probs, &unit)).abs() < 1e-12);
    }
}

#[test]
fn worked_examples() {
    let pu = ObjectiveConfig::new(Strategy::PuRm);
    let u = [Sample::new("u", vec![1.0], CoarseLabel::Uncertain)];
    let out = apply_strategy(&u, &pu).unwrap();
    assert_eq!(out[0].target, Target::Class(Label::Positive));
    assert_eq!(out[0].loss, LossKind::Pce);

    let pos = TaggedSample {
        features: vec![],
        target: Target::Class(Label::Positive),
        loss: LossKind::Pce,
    };
    let neg = TaggedSample {
        features: vec![],
        target: Target::Class(Label::Negative),
        loss: LossKind::Ce,
    };
    let p03 = Probabilities::from_positive(0.3).unwrap();
    let sure_neg = Probabilities::from_positive(0.0).unwrap();
    assert!((sample_loss(&pos, p03, &pu) - 1.20397).abs() < 1e-5);
    assert_eq!(sample_loss(&neg, sure_neg, &pu), 0.0);
    let mean = batch_loss(&[pos, neg], &[p03, sure_neg], &pu).unwrap();
    assert!((mean - 0.60199).abs() < 1e-5);

    let uc = TaggedSample {
        features: vec![],
        target: Target::Uniform,
        loss: LossKind::Uc,
    };
    let half = Probabilities::from_positive(0.5).unwrap();
    let v = sample_loss(&uc, half, &ObjectiveConfig::new(Strategy::UUniform));
    assert!((v - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn blank_labels_are_rejected() {
    let d = [Sample::new("b", vec![0.0], CoarseLabel::Blank)];
    for st in Strategy::ALL {
        assert!(apply_strategy(&d, &ObjectiveConfig::new(st)).is_err());
    }
}
