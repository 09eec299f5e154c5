use std::process::{Command, Output};

use cosserat::report::ReportDocument;

fn cosserat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosserat")).args(args).output().unwrap()
}

#[test]
fn reports_are_deterministic() {
    let args = ["run", "factorization", "--grid", "8", "--seed", "3"];
    let (a, b) = (cosserat(&args), cosserat(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: ReportDocument = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc.schema, 1);
    assert_eq!(doc.suite, "factorization");
    assert!(doc.reports.windows(2).all(|w| w[0].check_name < w[1].check_name));
    assert!(doc.reports.iter().all(|r| r.pass && r.runtime_ms.is_none()));
}

#[test]
fn csv_output_has_header_and_one_row_per_check() {
    let out = cosserat(&["run", "coframe", "--grid", "8", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("check_name,m,r,s,a0,a1,a2,grid,order,seed,"));
    assert_eq!(lines.filter(|l| l.starts_with("coframe-")).count(), 3);
}

#[test]
fn table1_prints_four_rows() {
    let out = cosserat(&["table1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "r,s,particle,spin,energy\n+,+,electron,up,0.75\n+,-,positron,down,1.25\n-,+,positron,up,1.25\n-,-,electron,down,0.75\n"
    );
}

#[test]
fn bad_input_exits_with_2() {
    assert_eq!(cosserat(&["table1", "--A0", "1.5"]).status.code(), Some(2));
    assert_eq!(cosserat(&["run", "nonsense"]).status.code(), Some(2));
    assert_eq!(cosserat(&["run", "coframe", "--order", "3"]).status.code(), Some(2));
}

#[test]
fn failing_check_exits_nonzero() {
    let out = cosserat(&["run", "coframe", "--grid", "8", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("FAIL coframe-correspondence"));
}

#[test]
fn sampled_field_survives_dump_and_load() {
    let dir = tempfile::tempdir().unwrap();
    for grid in ["8", "8,8,8,8"] {
        let path = dir.path().join(format!("field-{grid}.bin"));
        let path = path.to_str().unwrap();
        assert_eq!(cosserat(&["sample", "--grid", grid, "--seed", "5", "--dump", path]).status.code(), Some(0));
        let out = cosserat(&["check-field", "--grid", grid, "--load", path]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let doc: ReportDocument = serde_json::from_slice(&out.stdout).unwrap();
        assert!(doc.reports.iter().any(|r| r.check_name == "loaded-coframe"));
    }
}
