use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use minmod_cli::description::{Description, DescriptionError, Model};
use minmod_cli::pipeline::{am_of, run_pipeline, PipelineOptions};
use minmod_core::generate;
use minmod_core::operators::{ShiftForm, ShiftedDiagonalModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn testdata() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata")
}

fn minmod(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_minmod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_temp(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("minmod-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn tail_doc(limit: &str, coefficient: &str, start: u64, direction: &str) -> String {
    format!(
        r#"{{"schema_version": "1", "kind": "positive-diagonal", "tails": [{{"limit": "{limit}", "direction": "{direction}", "coefficient": "{coefficient}", "exponent": 1, "start_index": {start}}}]}}"#
    )
}

fn classify_text(text: &str) -> minmod_cli::pipeline::ClassificationReport {
    run_pipeline(
        &Description::parse(text).unwrap(),
        &PipelineOptions::default(),
    )
    .unwrap()
}

#[test]
fn one_minus_reciprocal_report() {
    let r = classify_text(&tail_doc("1", "1", 1, "below"));
    assert_eq!(r.min_modulus.as_ref().unwrap().exact, "0");
    assert!(r.min_attaining.as_ref().unwrap().attained);
    assert_eq!(am_of(&r), Some(true));
    assert_eq!(r.decomposition.as_ref().unwrap().beta.exact, "1");
    let d = r.duality.as_ref().unwrap();
    assert_eq!(d.an_of_pseudoinverse.as_deref(), Some("AN"));
    assert!(d.consistent);
}

#[test]
fn one_plus_reciprocal_report() {
    let r = classify_text(&tail_doc("1", "1", 1, "above"));
    assert_eq!(r.min_modulus.as_ref().unwrap().exact, "1");
    assert!(!r.min_attaining.as_ref().unwrap().attained);
    assert_eq!(am_of(&r), Some(false));
    assert_eq!(r.an.as_ref().unwrap().verdict, "AN");
    assert!(r.am.as_ref().unwrap().witness.is_none());
}

#[test]
fn witness_is_emitted_on_request() {
    let desc = Description::parse(&tail_doc("1", "1", 1, "above")).unwrap();
    let opts = PipelineOptions {
        emit_witness: true,
        ..PipelineOptions::default()
    };
    let r = run_pipeline(&desc, &opts).unwrap();
    let witness = r.am.unwrap().witness.expect("witness for NotAM");
    assert_eq!(witness["streams"], serde_json::json!(["all"]));
}

#[test]
fn normal_model_has_two_blocks() {
    let text = fs::read_to_string(testdata().join("normal_two_blocks.json")).unwrap();
    let r = classify_text(&text);
    assert_eq!(am_of(&r), Some(true));
    assert_eq!(
        r.spectral_blocks.unwrap()["blocks"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn pseudoinverse_of_non_closed_range_is_a_field() {
    let r = classify_text(&tail_doc("0", "1", 1, "above"));
    let p = r.pseudoinverse.unwrap();
    assert!(!p.bounded);
    assert!(p.error.is_some());
}

#[test]
fn shifted_and_multiplication_extras() {
    let shifted =
        classify_text(&fs::read_to_string(testdata().join("shifted_order_two.json")).unwrap());
    assert_eq!(shifted.adjoint_transfer.unwrap()["ess_equal"], true);
    let mult =
        classify_text(&fs::read_to_string(testdata().join("multiplication_atoms.json")).unwrap());
    let cross = &mult.multiplication.unwrap()["diagonal_cross_check"];
    for key in [
        "min_modulus_agrees",
        "am_agrees",
        "an_agrees",
        "attainment_agrees",
    ] {
        assert_eq!(cross[key], true, "{key}");
    }
}

#[test]
fn goldens_match() {
    for entry in fs::read_dir(testdata()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let stem = path.file_stem().unwrap().to_str().unwrap();
        let golden = testdata()
            .join("golden")
            .join(format!("{stem}.report.json"));
        let report = classify_text(&fs::read_to_string(&path).unwrap()).to_json();
        assert_eq!(report, fs::read_to_string(&golden).unwrap(), "{stem}");
    }
}

#[test]
fn exit_codes_distinguish_failures() {
    let input = write_temp("negative.json", &tail_doc("1", "2", 1, "below"));
    let out = minmod(&[
        "classify",
        "--input",
        input.to_str().unwrap(),
        "--report",
        "-",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("tails[0]"));

    let input = write_temp(
        "unknown.json",
        r#"{"schema_version": "1", "kind": "hexagonal"}"#,
    );
    let out = minmod(&[
        "classify",
        "--input",
        input.to_str().unwrap(),
        "--report",
        "-",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let input = write_temp(
        "broken.json",
        "{\n  \"schema_version\": \"1\",\n  \"kind\" \"x\"\n}",
    );
    let out = minmod(&[
        "classify",
        "--input",
        input.to_str().unwrap(),
        "--report",
        "-",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = minmod(&[
        "classify",
        "--input",
        "/nonexistent/input.json",
        "--report",
        "-",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn classify_writes_the_golden_report() {
    let input = testdata().join("positive_one_minus.json");
    let report = std::env::temp_dir().join(format!("minmod-report-{}.json", std::process::id()));
    let out = minmod(&[
        "classify",
        "--input",
        input.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let golden =
        fs::read_to_string(testdata().join("golden/positive_one_minus.report.json")).unwrap();
    assert_eq!(fs::read_to_string(&report).unwrap(), golden);
}

#[test]
fn unknown_suite_is_an_error() {
    let out = minmod(&[
        "suite",
        "--name",
        "nonexistent",
        "--seed",
        "0",
        "--trials",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
}

#[test]
fn suite_prints_a_summary() {
    let out = minmod(&[
        "suite",
        "--name",
        "moore-penrose",
        "--seed",
        "7",
        "--trials",
        "20",
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["passed"], 20);
}

fn random_model(rng: &mut ChaCha8Rng) -> Model {
    match rng.random_range(0..6) {
        0 => Model::Positive(generate::positive_model(rng)),
        1 => Model::Normal(generate::normal_am_model(rng)),
        2 => {
            let form = if rng.random_bool(0.5) {
                ShiftForm::Isometric
            } else {
                ShiftForm::CoIsometric
            };
            let base = generate::shifted_model(rng);
            Model::Shifted(ShiftedDiagonalModel::with_form(
                base.shift_order(),
                base.diag().clone(),
                form,
            ))
        }
        3 => {
            let n = rng.random_range(1..4);
            let g = generate::complex_matrix(rng, n, n);
            Model::DirectSum {
                block: g.adjoint().mul(&g),
                model: generate::am_triple(rng).model,
            }
        }
        4 => Model::Multiplication(generate::measure_model(rng)),
        _ => {
            let (r, c) = (rng.random_range(1..6), rng.random_range(1..6));
            Model::Matrix(generate::complex_matrix(rng, r, c))
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn emit_then_parse_is_identity(seed in any::<u64>()) {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let desc = Description::from_model(&model).named(format!("generated-{seed}"));
        let parsed = Description::parse(&desc.to_json()).unwrap();
        prop_assert_eq!(&parsed, &desc);
        prop_assert_eq!(parsed.model().unwrap(), model);
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,200}") {
        let _ = Description::parse(&text);
    }

    #[test]
    fn errors_carry_exit_codes(seed in any::<u64>(), cut in 0usize..400) {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let text = Description::from_model(&model).to_json();
        let cut = cut.min(text.len());
        if let Err(e) = Description::parse(&text[..text.floor_char_boundary(cut)]) {
            let structural = matches!(e, DescriptionError::Syntax { .. } | DescriptionError::Schema { .. });
            prop_assert!(structural, "unexpected error kind: {}", e);
            prop_assert_eq!(e.exit_code(), 2);
        }
    }
}

#[test]
fn reports_are_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..12 {
        let model = random_model(&mut rng);
        if let Model::Matrix(m) = &model {
            if m.rows() != m.cols() {
                continue;
            }
        }
        let desc = Description::from_model(&model);
        let opts = PipelineOptions {
            truncation: 64,
            ..PipelineOptions::default()
        };
        let a = run_pipeline(&desc, &opts).unwrap().to_json();
        let b = run_pipeline(&Description::parse(&desc.to_json()).unwrap(), &opts)
            .unwrap()
            .to_json();
        assert_eq!(a, b);
    }
}
