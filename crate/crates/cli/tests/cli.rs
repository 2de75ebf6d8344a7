use std::process::Command;

use qualpert_cli::{
    parse_problem, run, DocumentError, ProblemDocument, EXIT_FINDINGS, EXIT_OK, EXIT_USAGE,
};
use qualpert_core::scanner::scan_singular;
use qualpert_core::{catalog, CatalogParams, ScanReport};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qualpert").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

const TWO_VAR_HEAD: &str = r#""name": "t", "num_vars": 2"#;

#[test]
fn document_round_trip_preserves_cusp() {
    let prob = catalog("cusp", &CatalogParams::default()).unwrap();
    let doc = ProblemDocument::from_instance(&prob, "cusp", "catalog");
    let back = parse_problem(&doc.to_json()).unwrap();
    assert_eq!(back.num_inequalities(), prob.num_inequalities());
    assert_eq!(back.perturbable(), prob.perturbable());
    assert_eq!(back.sample_box(), prob.sample_box());
    for (a, b) in back.inequalities().zip(prob.inequalities()) {
        assert_eq!(a, b);
    }
    // and the document itself is a fixed point
    assert_eq!(ProblemDocument::from_json(&doc.to_json()).unwrap(), doc);
}

#[test]
fn exponent_length_error_names_the_term() {
    let text = format!(
        r#"{{ {TWO_VAR_HEAD}, "inequalities": [[{{"coef": 1, "exps": [1, 0]}}, {{"coef": 2, "exps": [1]}}]] }}"#
    );
    match parse_problem(&text).unwrap_err() {
        DocumentError::ExpsLength {
            path,
            term,
            expected,
            got,
        } => {
            assert_eq!(term, 1);
            assert_eq!((expected, got), (2, 1));
            assert!(path.contains("inequalities[0][1]"), "{path}");
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn perturbable_index_out_of_range() {
    let text = format!(
        r#"{{ {TWO_VAR_HEAD}, "inequalities": [[{{"coef": 1, "exps": [1, 0]}}], [{{"coef": 1, "exps": [0, 1]}}]], "perturbable": [3] }}"#
    );
    match parse_problem(&text).unwrap_err() {
        DocumentError::IndexOutOfRange { index, max, .. } => assert_eq!((index, max), (3, 2)),
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn malformed_and_schema_errors_differ() {
    let malformed = parse_problem(r#"{"name": "t", "num_vars": "#).unwrap_err();
    assert!(
        matches!(malformed, DocumentError::Malformed { line: 1, .. }),
        "{malformed:?}"
    );

    let wrong_type =
        parse_problem(r#"{"name": "t", "num_vars": "two", "inequalities": []}"#).unwrap_err();
    match wrong_type {
        DocumentError::Schema { path, .. } => assert_eq!(path, "$.num_vars"),
        e => panic!("unexpected {e:?}"),
    }
    let unknown = parse_problem(r#"{"name": "t", "num_vars": 1, "inequalities": [], "extra": 1}"#)
        .unwrap_err();
    assert!(
        matches!(unknown, DocumentError::Schema { .. }),
        "{unknown:?}"
    );
    let nested =
        format!(r#"{{ {TWO_VAR_HEAD}, "inequalities": [[{{"coef": "x", "exps": [1, 0]}}]] }}"#);
    match parse_problem(&nested).unwrap_err() {
        DocumentError::Schema { path, .. } => assert_eq!(path, "$.inequalities[0][0].coef"),
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn exit_codes() {
    assert_eq!(
        call(&["bound", "--n", "2", "--m", "3", "--d", "2"]).0,
        EXIT_OK
    );
    assert_eq!(
        call(&[
            "mfcq",
            "--problem",
            "cusp",
            "--alpha",
            "0",
            "--point",
            "0,0"
        ])
        .0,
        EXIT_FINDINGS
    );
    assert_eq!(
        call(&[
            "mfcq",
            "--problem",
            "cusp",
            "--alpha",
            "0.1",
            "--point",
            "0,0"
        ])
        .0,
        EXIT_OK
    );
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(
        call(&["scan", "--problem", "nope", "--window", "0,1"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        call(&[
            "mfcq",
            "--file",
            "/nonexistent/p.json",
            "--alpha",
            "0",
            "--sweep"
        ])
        .0,
        EXIT_USAGE
    );
    // infeasible start at a level where it cannot recover
    let esqm = call(&[
        "esqm",
        "--problem",
        "ball_box",
        "--alpha",
        "6.8",
        "--x0",
        "0.9,0.9",
        "--max-iter",
        "50",
    ]);
    assert_eq!(esqm.0, EXIT_FINDINGS);
    // the level 4.0 is empty for ball_box: the last homotopy level is infeasible
    let hom = call(&[
        "homotopy",
        "--problem",
        "ball_box",
        "--schedule",
        "6.8,4",
        "--x0=0,-0.9",
    ]);
    assert_eq!(hom.0, EXIT_FINDINGS, "{}", hom.1);
}

#[test]
fn binary_reports_the_same_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_qualpert");
    let st = Command::new(bin)
        .args(["bound", "--n", "2", "--m", "3", "--d", "2"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8_lossy(&st.stdout).trim(), "2250");
    let st = Command::new(bin)
        .args([
            "mfcq",
            "--problem",
            "cusp",
            "--alpha",
            "0",
            "--point",
            "0,0",
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(EXIT_FINDINGS));
    let st = Command::new(bin).arg("--bogus").output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_USAGE));
}

#[test]
fn scan_report_file_reparses_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.json");
    let p = path.to_str().unwrap();
    let (code, _, _) = call(&[
        "scan",
        "--problem",
        "cusp",
        "--window=-0.5,0.5",
        "--starts",
        "40",
        "--seed",
        "5",
        "--out",
        p,
    ]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&path).unwrap();
    let from_file = ScanReport::from_json(&text).unwrap();
    let prob = catalog("cusp", &CatalogParams::default()).unwrap();
    let direct = scan_singular(&prob, (-0.5, 0.5), 40, 5).unwrap();
    assert_eq!(from_file, direct);
    assert_eq!(from_file.to_json().unwrap(), text.trim_end());
}

#[test]
fn seeds_are_echoed_and_runs_repeat() {
    let scan = [
        "scan",
        "--problem",
        "cusp",
        "--window=-0.5,0.5",
        "--starts",
        "30",
        "--seed",
        "31",
    ];
    let a = call(&scan);
    assert!(a.1.contains("seed 31"), "{}", a.1);
    assert_eq!(a, call(&scan));
    let mut json = scan.to_vec();
    json.extend(["--format", "json"]);
    assert!(call(&json).1.contains("\"seed\": 31"));

    let sweep = [
        "mfcq",
        "--problem",
        "cusp",
        "--alpha",
        "0.1",
        "--sweep",
        "--samples",
        "25",
        "--seed",
        "12",
    ];
    let b = call(&sweep);
    assert!(b.1.contains("seed 12"), "{}", b.1);
    assert_eq!(b, call(&sweep));
}

#[test]
fn file_problems_and_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let doc_path = dir.path().join("cusp.json");
    let (code, doc, _) = call(&["catalog", "--problem", "cusp"]);
    assert_eq!(code, EXIT_OK);
    std::fs::write(&doc_path, doc).unwrap();
    let (code, out, _) = call(&[
        "mfcq",
        "--file",
        doc_path.to_str().unwrap(),
        "--alpha",
        "0",
        "--point",
        "0,0",
    ]);
    assert_eq!(code, EXIT_FINDINGS, "{out}");

    let (code, csv, _) = call(&[
        "scan",
        "--problem",
        "cusp",
        "--window=-0.5,0.5",
        "--starts",
        "20",
        "--format",
        "csv",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(csv.starts_with("alpha,K,L,residual,x1,x2"), "{csv}");
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn bound_from_problem_matches_flags() {
    let (_, from_family, _) = call(&["bound", "--problem", "ball_box"]);
    let (_, from_flags, _) = call(&["bound", "--n", "2", "--m", "3", "--d", "2"]);
    assert_eq!(from_family, from_flags);
}
