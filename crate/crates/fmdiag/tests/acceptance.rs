//! Acceptance suite. Each test covers one release criterion at its stated
//! tolerance and prints one PASS/FAIL line; run with `--nocapture` to see
//! the lines as they go.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fmdiag::bench::{run_bench, BenchParams};
use fmdiag_core::{
    encode, parse_model, parse_test_suite, preprocess, DebugError, DebugSession, RelationshipKind,
    SynthParams, TestSuite,
};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn survey_suite() -> (fmdiag_core::FeatureModel, TestSuite) {
    let model_text = std::fs::read_to_string(data("survey.fm")).unwrap();
    let suite_text = std::fs::read_to_string(data("paper.tc")).unwrap();
    let model = parse_model(&model_text).unwrap();
    let suite = parse_test_suite(&suite_text, Some(&model)).unwrap();
    (model, suite)
}

fn survey_session() -> DebugSession {
    let (model, suite) = survey_suite();
    let cs = encode(&model);
    let consider: Vec<&str> = cs.labels().filter(|l| *l != "c0").collect();
    preprocess(&cs, &consider, &suite.positives, &suite.negatives).unwrap()
}

fn report(number: usize, name: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("acceptance criterion {number} ({name}): PASS"),
        Err(reason) => {
            println!("acceptance criterion {number} ({name}): FAIL - {reason}");
            panic!("criterion {number} ({name}) failed: {reason}");
        }
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

#[test]
fn criterion_1_paper_example_end_to_end() {
    let run = || -> Result<(), String> {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_fmdiag"))
            .args(["diagnose", "--model"])
            .arg(data("survey.fm"))
            .arg("--tests")
            .arg(data("paper.tc"))
            .output()
            .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        ensure(out.status.success(), "diagnose exited nonzero")?;
        let expected = "filtered: t4\n\
                        gamma: c2 c3 c4 c5 c6\n\
                        delta: c1 c7 c8\n\
                        nodes: 11  solver-calls: 21\n";
        let got = String::from_utf8_lossy(&out.stdout);
        ensure(got == expected, format!("output mismatch:\n{got}"))?;
        ensure(
            elapsed.as_secs_f64() < 1.0,
            format!("took {:.3}s, budget 1s", elapsed.as_secs_f64()),
        )
    };
    report(1, "paper example end-to-end", run());
}

#[test]
fn criterion_2_trace_fidelity() {
    let run = || -> Result<(), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_fmdiag"))
            .args(["diagnose", "--model"])
            .arg(data("survey.fm"))
            .arg("--tests")
            .arg(data("paper.tc"))
            .arg("--trace")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), "diagnose --trace exited nonzero")?;
        let golden = std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/survey_trace.golden"),
        )
        .map_err(|e| e.to_string())?;
        let got = String::from_utf8_lossy(&out.stdout);
        ensure(
            got == golden,
            format!("trace differs from golden file:\n{got}"),
        )?;
        ensure(
            golden.lines().filter(|l| l.starts_with("node ")).count() == 11,
            "golden file must transcribe 11 nodes",
        )
    };
    report(2, "trace fidelity", run());
}

#[test]
fn criterion_3_ground_truth_diagnoses() {
    let run = || -> Result<(), String> {
        let mut session = survey_session();
        let got = session.all_minimal_diagnoses().map_err(|e| e.to_string())?;
        let expected = vec![
            vec!["c1".to_string(), "c2".to_string()],
            vec!["c1".to_string(), "c7".to_string(), "c8".to_string()],
        ];
        ensure(got == expected, format!("oracle returned {got:?}"))
    };
    report(3, "ground-truth diagnoses", run());
}

#[test]
fn criterion_4_analysis_claims() {
    let run = || -> Result<(), String> {
        let (model, _) = survey_suite();
        let cs = encode(&model);
        let before = fmdiag_core::analyze(&cs, &model);
        ensure(!before.void, "survey model must not be void")?;
        ensure(
            before.dead_features.iter().any(|f| f == "nolicense"),
            "nolicense must be dead before the repair",
        )?;
        ensure(
            before.false_optionals.iter().any(|f| f == "statistics"),
            "statistics must be a false optional before the repair",
        )?;

        let repaired = cs.without_labels(&["c1", "c7", "c8"]);
        let after = fmdiag_core::analyze(&repaired, &model);
        ensure(!after.void, "repaired model must not be void")?;
        ensure(
            !after.dead_features.iter().any(|f| f == "nolicense"),
            "nolicense must not be dead after the repair",
        )?;
        ensure(
            !after.false_optionals.iter().any(|f| f == "statistics"),
            "statistics must not be a false optional after the repair",
        )
    };
    report(4, "analysis claims", run());
}

/// Logic-formula semantics of one relationship kind.
fn kind_semantics(kind: RelationshipKind, parent: bool, children: &[bool]) -> bool {
    match kind {
        RelationshipKind::Mandatory => parent == children[0],
        RelationshipKind::Optional => !children[0] || parent,
        RelationshipKind::Alternative => children.iter().enumerate().all(|(i, &ci)| {
            let others_off = children.iter().enumerate().all(|(j, &cj)| j == i || !cj);
            ci == (others_off && parent)
        }),
        RelationshipKind::Or => parent == children.iter().any(|&c| c),
    }
}

#[test]
fn criterion_5_encoding_fidelity() {
    let run = || -> Result<(), String> {
        let mut cases = vec![
            (RelationshipKind::Mandatory, 1),
            (RelationshipKind::Optional, 1),
        ];
        for kind in [RelationshipKind::Alternative, RelationshipKind::Or] {
            for size in 2..=4 {
                cases.push((kind, size));
            }
        }
        for (kind, size) in cases {
            let children: Vec<String> = (0..size).map(|i| format!("ch{i}")).collect();
            let text = format!(
                "feature p root\n{} p {}\n",
                kind.keyword(),
                children.join(" ")
            );
            let model = parse_model(&text).unwrap();
            let cs = encode(&model);
            let constraint = &cs.constraints()[1];
            for bits in 0u32..1 << (size + 1) {
                let value = |v: usize| bits & (1 << v) != 0;
                let expected =
                    kind_semantics(kind, value(0), &(1..=size).map(value).collect::<Vec<_>>());
                let got = constraint
                    .clauses
                    .iter()
                    .all(|c| c.iter().any(|l| value(l.var()) == l.is_positive()));
                ensure(
                    got == expected,
                    format!("{} size {size} diverges at {bits:#b}", kind.keyword()),
                )?;
            }
        }

        // Cross-tree constraints over all assignments.
        let model =
            parse_model("feature p root\noptional p a\noptional p b\nrequires a b\nexcludes a b\n")
                .unwrap();
        let cs = encode(&model);
        let a = cs.vars().index_of("a").unwrap();
        let b = cs.vars().index_of("b").unwrap();
        for bits in 0u32..1 << 3 {
            let value = |v: usize| bits & (1 << v) != 0;
            let sat = |label: &str| {
                cs.get(label)
                    .unwrap()
                    .clauses
                    .iter()
                    .all(|c| c.iter().any(|l| value(l.var()) == l.is_positive()))
            };
            ensure(
                sat("c3") == (!value(a) || value(b)),
                format!("requires diverges at {bits:#b}"),
            )?;
            ensure(
                sat("c4") == !(value(a) && value(b)),
                format!("excludes diverges at {bits:#b}"),
            )?;
        }

        // The documented consistent configuration satisfies every clause.
        let (model, _) = survey_suite();
        let cs = encode(&model);
        let config = [
            ("survey", true),
            ("payment", true),
            ("license", true),
            ("nolicense", false),
            ("ABtesting", true),
            ("statistics", true),
            ("Q&A", true),
            ("multiplechoice", true),
            ("singlechoice", true),
        ];
        let value = |v: usize| {
            let name = cs.vars().name_of(v).unwrap();
            config.iter().find(|(n, _)| *n == name).unwrap().1
        };
        for constraint in cs.constraints() {
            for clause in &constraint.clauses {
                ensure(
                    clause.iter().any(|l| value(l.var()) == l.is_positive()),
                    format!("example configuration violates {}", constraint.label),
                )?;
            }
        }
        Ok(())
    };
    report(5, "encoding fidelity", run());
}

#[test]
fn criterion_6_property_suite() {
    let run = || -> Result<(), String> {
        let start = Instant::now();
        let total = 500usize;
        let mut oracle_checked = 0usize;
        for i in 0..total {
            let cf = 8 + (i % 33); // 8..=40
            let t_pi = 2 + (i % 19); // 2..=20
            let seed = fmdiag_core::derive_seed(0xACCE97, &[i as u64]);
            let mut params = SynthParams::new(cf, seed);
            params.num_tests = t_pi;
            params.inconsistency_share = 0.3;

            let model = synth(&params, i)?;
            let tests = fmdiag_core::synth_tests(&model, &params)
                .map_err(|e| format!("instance {i}: tests: {e}"))?;
            let cs = encode(&model);
            let consider: Vec<&str> = cs.labels().filter(|l| *l != "c0").collect();
            let mut session = preprocess(&cs, &consider, &tests, &[])
                .map_err(|e| format!("instance {i}: preprocess: {e}"))?;

            let (result, trace) = session.diagnose_with_trace();

            let expected_calls: usize = trace.iter().map(|n| n.tests.len()).sum();
            ensure(
                result.solver_calls as usize == expected_calls,
                format!(
                    "instance {i}: solver calls {} != sum |T| {expected_calls}",
                    result.solver_calls
                ),
            )?;

            let delta: Vec<&str> = result.delta.iter().map(String::as_str).collect();
            ensure(
                session.verify_minimal(&delta).map_err(|e| e.to_string())?,
                format!("instance {i}: delta {:?} not minimal", result.delta),
            )?;

            if cf <= 20 {
                let oracle = session.all_minimal_diagnoses().map_err(|e| e.to_string())?;
                let sorted = |v: &[String]| {
                    let mut s = v.to_vec();
                    s.sort();
                    s
                };
                ensure(
                    oracle.iter().any(|d| sorted(d) == sorted(&result.delta)),
                    format!("instance {i}: delta {:?} not in oracle set", result.delta),
                )?;
                oracle_checked += 1;
            }

            // A fixed rotation permutes the consideration set.
            let rotation = 1 + (i % (consider.len() - 1));
            let mut permuted = consider.clone();
            permuted.rotate_left(rotation);
            let mut p_session = preprocess(&cs, &permuted, &tests, &[])
                .map_err(|e| format!("instance {i}: permuted preprocess: {e}"))?;
            let p_result = p_session.diagnose();
            let p_delta: Vec<&str> = p_result.delta.iter().map(String::as_str).collect();
            ensure(
                p_session
                    .verify_minimal(&p_delta)
                    .map_err(|e| e.to_string())?,
                format!(
                    "instance {i}: permuted delta {:?} not minimal",
                    p_result.delta
                ),
            )?;
        }
        let elapsed = start.elapsed().as_secs_f64();
        ensure(
            oracle_checked >= 150,
            format!("only {oracle_checked} oracle checks"),
        )?;
        ensure(
            elapsed < 300.0,
            format!("property suite took {elapsed:.1}s, budget 300s"),
        )
    };
    report(6, "property suite over seeded instances", run());
}

fn synth(params: &SynthParams, instance: usize) -> Result<fmdiag_core::FeatureModel, String> {
    fmdiag_core::synth_model(params).map_err(|e| format!("instance {instance}: model: {e}"))
}

#[test]
fn criterion_7_desk_scale_performance() {
    let run = || -> Result<(), String> {
        let params = BenchParams {
            reps: 1,
            seed: 42,
            ..BenchParams::default()
        };
        let report = run_bench(&params);
        ensure(
            report.failed.is_empty(),
            format!("failed cells: {:?}", report.failed),
        )?;
        ensure(
            report.samples.len() == 7 * 6,
            format!(
                "expected the default 7x6 grid, got {} samples",
                report.samples.len()
            ),
        )?;

        let big = report
            .samples
            .iter()
            .find(|s| s.t_pi == 100 && s.cf == 1000)
            .ok_or("missing (100, 1000) cell")?;
        ensure(
            big.diagnosis_ms < 60_000.0,
            format!(
                "(100, 1000) took {:.1} ms, budget 60000 ms",
                big.diagnosis_ms
            ),
        )?;

        // Monotone growth between grid extremes, within 2x noise.
        for &cf in &report.cols {
            let small = report.mean_ms(5, cf).ok_or("missing row 5")?;
            let large = report.mean_ms(500, cf).ok_or("missing row 500")?;
            ensure(
                large >= small / 2.0,
                format!("column {cf}: mean({large:.3}) at 500 tests vs {small:.3} at 5"),
            )?;
        }
        for &t_pi in &report.rows {
            let small = report.mean_ms(t_pi, 10).ok_or("missing col 10")?;
            let large = report.mean_ms(t_pi, 1000).ok_or("missing col 1000")?;
            ensure(
                large >= small / 2.0,
                format!("row {t_pi}: mean({large:.3}) at 1000 constraints vs {small:.3} at 10"),
            )?;
        }
        Ok(())
    };
    report(7, "desk-scale performance", run());
}

#[test]
fn criterion_8_preprocessing_contract() {
    let run = || -> Result<(), String> {
        let (model, _) = survey_suite();
        let cs = encode(&model);
        let consider: Vec<&str> = cs.labels().filter(|l| *l != "c0").collect();

        // A positive test contradicting the background names itself.
        let impossible = parse_test_suite("positive survey=f\n", Some(&model)).unwrap();
        let err = preprocess(&cs, &consider, &impossible.positives, &impossible.negatives)
            .err()
            .ok_or("expected NoDiagnosisPossible")?;
        ensure(
            err == DebugError::NoDiagnosisPossible { test: "t1".into() },
            format!("got {err:?}"),
        )?;

        // A fully consistent suite diagnoses to nothing without recursing.
        let clean = parse_test_suite(
            "positive singlechoice=f\npositive license=t\n",
            Some(&model),
        )
        .unwrap();
        let mut session = preprocess(&cs, &consider, &clean.positives, &clean.negatives)
            .map_err(|e| e.to_string())?;
        let result = session.diagnose();
        ensure(result.delta.is_empty(), format!("delta {:?}", result.delta))?;
        ensure(
            result.recursion_nodes == 0,
            format!("{} recursion nodes", result.recursion_nodes),
        )?;
        ensure(
            result.gamma.len() == consider.len(),
            "gamma must equal the whole consideration set",
        )
    };
    report(8, "preprocessing contract", run());
}
