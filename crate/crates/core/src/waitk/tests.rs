use super::*;
use crate::metrics::{average_lagging, average_proportion, Smoothing};
use proptest::prelude::*;

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(String::from).collect()
}

struct Babbler;

impl IncrementalGenerator for Babbler {
    fn id(&self) -> &str {
        "babbler"
    }

    fn next_token(&self, _: &StepRequest<'_>) -> Result<Step, GeneratorError> {
        Ok(Step::Token("la".into()))
    }
}

#[test]
fn echo_wait3() {
    let src = words("a b c d e f g h i j");
    let sim = simulate_waitk(&src, &WaitKConfig::new(3), &EchoGenerator).unwrap();
    assert_eq!(sim.schedule.g(), [3, 4, 5, 6, 7, 8, 9, 10, 10, 10]);
    assert_eq!(sim.hypothesis, src);
    assert!((average_proportion(&sim.schedule).unwrap() - 0.72).abs() < 1e-12);
    assert!((average_lagging(&sim.schedule).unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn large_k_is_offline() {
    let src = words("a b c d");
    let sim = simulate_waitk(&src, &WaitKConfig::new(9), &EchoGenerator).unwrap();
    assert_eq!(sim.schedule.g(), [4, 4, 4, 4]);
}

#[test]
fn runaway_generator_is_capped() {
    let src = words("a b c");
    let config = WaitKConfig::new(2);
    let sim = simulate_waitk(&src, &config, &Babbler).unwrap();
    assert_eq!(sim.hypothesis.len(), 16);
    assert_eq!(sim.schedule.tgt_len(), config.cap(3));
}

#[test]
fn empty_and_invalid() {
    assert!(matches!(
        simulate_waitk(&[], &WaitKConfig::new(3), &EchoGenerator),
        Err(WaitKError::EmptySource)
    ));
    assert!(simulate_waitk(&words("a"), &WaitKConfig::new(0), &EchoGenerator).is_err());
}

#[test]
fn table_generator_emits_mapping() {
    let table = TableGenerator::from_pairs("t", [("x y z", "a b c")]);
    let sim = simulate_waitk(&words("x y z"), &WaitKConfig::new(3), &table).unwrap();
    assert_eq!(sim.hypothesis, words("a b c"));
    let err = simulate_waitk(&words("q"), &WaitKConfig::new(3), &table).unwrap_err();
    assert!(matches!(
        err,
        WaitKError::Generator {
            source: GeneratorError::Unmapped(_),
            position: 1,
            ..
        }
    ));
}

#[test]
fn table_run_scores_100_and_closed_form_latency() {
    let sources = ["s1 s2 s3 s4 s5", "t1 t2 t3 t4 t5 t6 t7", "u1 u2 u3 u4"];
    let targets = ["a b c d e", "f g h i j k l", "m n o p"];
    let table = TableGenerator::from_pairs("t", sources.iter().zip(targets.iter()));
    let config = WaitKConfig::new(3);
    let (report, sims) = run_eval(
        &sources,
        &targets,
        &targets,
        &config,
        &table,
        &BleuConfig::default(),
    )
    .unwrap();
    assert_eq!(report.bleu_translation, 100.0);
    assert_eq!(report.gap, 0.0);
    let mut ap = 0.0;
    let mut al = 0.0;
    for s in &sims {
        let n = s.schedule.src_len();
        let expected = ReadWriteSchedule::wait_k(3, n, n).unwrap();
        assert_eq!(s.schedule, expected);
        ap += average_proportion(&expected).unwrap();
        al += average_lagging(&expected).unwrap();
    }
    assert!((report.latency.ap - ap / 3.0).abs() < 1e-12);
    assert!((report.latency.al - al / 3.0).abs() < 1e-12);
    assert!((report.latency.al - 3.0).abs() < 1e-12);
}

#[test]
fn dropout_opens_a_gap() {
    let sources: Vec<String> = (0..20)
        .map(|i| {
            (0..8)
                .map(|j| format!("s{i}_{j}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let targets: Vec<String> = (0..20)
        .map(|i| {
            (0..8)
                .map(|j| format!("w{}", (i * 3 + j) % 11))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    // drop every fifth token of the interpretation references
    let interp: Vec<String> = targets
        .iter()
        .map(|t| {
            t.split(' ')
                .enumerate()
                .filter(|(j, _)| j % 5 != 4)
                .map(|(_, w)| w)
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let table = TableGenerator::from_pairs("t", sources.iter().zip(targets.iter()));
    let bleu = BleuConfig {
        smoothing: Smoothing::None,
        ..BleuConfig::default()
    };
    let (report, _) = run_eval(
        &sources,
        &targets,
        &interp,
        &WaitKConfig::new(3),
        &table,
        &bleu,
    )
    .unwrap();
    assert!(report.gap > 0.0, "{report:?}");
}

#[test]
fn line_count_mismatch() {
    let err = run_eval(
        &["a"],
        &["a", "b"],
        &["a"],
        &WaitKConfig::new(3),
        &EchoGenerator,
        &BleuConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, WaitKError::LineCountMismatch { .. }));
}

#[test]
fn table_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.tsv");
    std::fs::write(&path, "x y\ta b\n\nz\tc\n").unwrap();
    let gen = generator_from_spec(&format!("table:{}", path.display())).unwrap();
    let sim = simulate_waitk(&words("z"), &WaitKConfig::new(1), gen.as_ref()).unwrap();
    assert_eq!(sim.hypothesis, ["c"]);
    std::fs::write(&path, "no tab here\n").unwrap();
    assert!(TableGenerator::load(&path).is_err());
    assert!(generator_from_spec("bogus").is_err());
}

#[test]
fn external_process_generator() {
    let script = r#"n=0; while read line; do n=$((n+1)); if [ $n -le 3 ]; then echo "{\"token\":\"w$n\"}"; else echo '{"end":true}'; n=0; fi; done"#;
    let gen = ProcessGenerator::spawn("sh", &["-c".into(), script.into()]).unwrap();
    let sim = simulate_waitk(&words("a b c d e"), &WaitKConfig::new(2), &gen).unwrap();
    assert_eq!(sim.hypothesis, ["w1", "w2", "w3"]);
    assert_eq!(sim.schedule.g(), [2, 3, 4]);
    // the counter reset, so a second sentence decodes the same way
    let again = simulate_waitk(&words("a b"), &WaitKConfig::new(2), &gen).unwrap();
    assert_eq!(again.hypothesis, ["w1", "w2", "w3"]);

    let bad =
        ProcessGenerator::spawn("sh", &["-c".into(), "read line; echo nonsense".into()]).unwrap();
    assert!(simulate_waitk(&words("a"), &WaitKConfig::new(1), &bad).is_err());
}

proptest! {
    #[test]
    fn schedule_law(len in 1usize..30, k in 1usize..12, out in 0usize..40) {
        let src: Vec<String> = (0..len).map(|i| format!("s{i}")).collect();
        let tgt: Vec<String> = (0..out).map(|i| format!("t{i}")).collect();
        let table = TableGenerator::from_pairs("p", [(src.join(" "), tgt.join(" "))]);
        let config = WaitKConfig::new(k);
        let sim = simulate_waitk(&src, &config, &table).unwrap();
        prop_assert_eq!(sim.hypothesis.len(), out.min(config.cap(len)));
        for (t, &g) in sim.schedule.g().iter().enumerate() {
            prop_assert_eq!(g, (t + 1 + k - 1).min(len));
        }
        // token identities do not affect the schedule
        let renamed = TableGenerator::from_pairs("q", [(src.join(" "), tgt.iter().map(|t| format!("x{t}")).collect::<Vec<_>>().join(" "))]);
        let other = simulate_waitk(&src, &config, &renamed).unwrap();
        prop_assert_eq!(other.schedule, sim.schedule);
    }
}
