use proptest::prelude::*;
use riskmod::data::*;
use riskmod::labeler::{label_report, Lexicon, Subcategory};

fn small_synth() -> impl Strategy<Value = SynthConfig> {
    (
        0usize..20,
        0usize..20,
        0usize..20,
        0usize..20,
        0.0f64..0.5,
        any::<u64>(),
    )
        .prop_map(|(n, t, a, u, noise, seed)| {
            let mut cfg = SynthConfig::default();
            cfg.negative.count = n;
            cfg.typical.count = t;
            cfg.atypical.count = a;
            cfg.uncertain.count = u;
            cfg.noise_rate = noise;
            cfg.seed = seed;
            cfg
        })
}

fn count(d: &[Sample], c: CoarseLabel) -> usize {
    d.iter().filter(|s| s.coarse == c).count()
}

proptest! {
    #[test]
    fn counts_match_config(cfg in small_synth()) {
        let d = generate(&SynthConfig { noise_rate: 0.0, ..cfg }).unwrap();
        prop_assert_eq!(count(&d, CoarseLabel::Negative), cfg.negative.count);
        prop_assert_eq!(count(&d, CoarseLabel::Positive), cfg.typical.count + cfg.atypical.count);
        prop_assert_eq!(count(&d, CoarseLabel::Uncertain), cfg.uncertain.count);
        let fine = |sub| d.iter().filter(|s| s.fine == Some(sub)).count();
        prop_assert_eq!(fine(Subcategory::Typical), cfg.typical.count);
        prop_assert_eq!(fine(Subcategory::Atypical), cfg.atypical.count);
        for s in &d {
            prop_assert!(s.fine.is_none() || s.coarse == CoarseLabel::Positive);
        }
    }

    #[test]
    fn noise_flips_exact_count(cfg in small_synth(), rate in 0.0f64..0.99, seed in any::<u64>()) {
        let clean = generate(&SynthConfig { noise_rate: 0.0, ..cfg }).unwrap();
        let noisy = inject_noise(clean.clone(), rate, seed).unwrap();
        let binary = clean.len() - count(&clean, CoarseLabel::Uncertain);
        let flipped = clean.iter().zip(&noisy).filter(|(a, b)| a.coarse != b.coarse).count();
        prop_assert_eq!(flipped, (rate * binary as f64).round() as usize);
        prop_assert_eq!(noisy.len(), clean.len());
        for (a, b) in clean.iter().zip(&noisy) {
            prop_assert_eq!(&a.features, &b.features);
            prop_assert_eq!(a.fine, b.fine);
            if a.coarse == CoarseLabel::Uncertain {
                prop_assert_eq!(b.coarse, CoarseLabel::Uncertain);
            }
        }
    }

    #[test]
    fn noise_is_an_involution(cfg in small_synth(), rate in 0.0f64..0.99, seed in any::<u64>()) {
        let clean = generate(&SynthConfig { noise_rate: 0.0, ..cfg }).unwrap();
        let twice = inject_noise(inject_noise(clean.clone(), rate, seed).unwrap(), rate, seed).unwrap();
        prop_assert_eq!(twice, clean);
    }

    #[test]
    fn jsonl_round_trip(cfg in small_synth()) {
        let d = generate(&cfg).unwrap();
        let text = to_jsonl(&d).unwrap();
        prop_assert_eq!(text.lines().count(), d.len());
        prop_assert_eq!(from_jsonl(&text, "mem").unwrap(), d);
    }

    #[test]
    fn same_seed_same_dataset(cfg in small_synth()) {
        prop_assert_eq!(to_jsonl(&generate(&cfg).unwrap()).unwrap(), to_jsonl(&generate(&cfg).unwrap()).unwrap());
    }

    #[test]
    fn attached_reports_relabel_to_their_subcategory(cfg in small_synth()) {
        let lex = Lexicon::default();
        for s in generate(&cfg).unwrap() {
            if let (Some(fine), Some(text)) = (s.fine, &s.report_text) {
                prop_assert_eq!(label_report(text, &lex).subcategory, fine, "{}", text);
            }
        }
    }
}

#[test]
fn file_round_trip_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        noise_rate: 0.1,
        seed: 5,
        ..SynthConfig::default()
    };
    let d = generate(&cfg).unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    write_dataset(&d, &a).unwrap();
    assert_eq!(read_dataset(&a).unwrap(), d);
    write_dataset(&generate(&cfg).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn malformed_lines_name_the_line() {
    let good = r#"{"id":"a","features":[1.0],"coarse":"0"}"#;
    let blank = r#"{"id":"b","features":[1.0],"coarse":"blank"}"#;
    let err = from_jsonl(&format!("{good}\n{blank}\n"), "f.jsonl")
        .unwrap_err()
        .to_string();
    assert!(err.contains("f.jsonl:2"), "{err}");
    let err = from_jsonl(&format!("{good}\n{good}\nnot json\n"), "f.jsonl")
        .unwrap_err()
        .to_string();
    assert!(err.contains("f.jsonl:3"), "{err}");
    assert!(from_jsonl("", "f").unwrap().is_empty());
    let empty = generate(&SynthConfig {
        negative: Cluster::new(0, [0.0, 0.0], 1.0),
        typical: Cluster::new(0, [0.0, 0.0], 1.0),
        atypical: Cluster::new(0, [0.0, 0.0], 1.0),
        uncertain: Cluster::new(0, [0.0, 0.0], 1.0),
        ..SynthConfig::default()
    })
    .unwrap();
    assert!(empty.is_empty());
}
