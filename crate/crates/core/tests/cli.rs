use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sicseq::catalog::tetrahedron_fiducial;
use sicseq::povm::{Pom, SequentialScheme};
use sicseq::tomography::TomographyReport;

fn sicseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sicseq"))
        .args(args)
        .env_remove("SICSEQ_TOL")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn catalog_then_verify_reports_sic() {
    let dir = tempfile::tempdir().unwrap();
    let pom = dir.path().join("pom.json");
    let gen = sicseq(&["catalog", "--dim", "3", "--gamma", "0.2", "--what", "pom", "-o", path_str(&pom)]);
    assert!(gen.status.success());
    let out = sicseq(&["verify", "--pom", path_str(&pom), "--require-sic"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["sic"]["is_sic"], true);
    assert_eq!(report["ic_rank"], 9);
}

#[test]
fn json_outputs_round_trip_bit_exactly() {
    for what in ["pom", "scheme"] {
        let out = sicseq(&["catalog", "--dim", "4", "--what", what]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let again = if what == "pom" {
            serde_json::to_string_pretty(&serde_json::from_str::<Pom>(&text).unwrap()).unwrap()
        } else {
            serde_json::to_string_pretty(&serde_json::from_str::<SequentialScheme>(&text).unwrap()).unwrap()
        };
        assert_eq!(text.trim_end(), again);
    }
}

#[test]
fn hw_from_fiducial_file() {
    let dir = tempfile::tempdir().unwrap();
    let fid = dir.path().join("fid.json");
    fs::write(&fid, serde_json::to_string(tetrahedron_fiducial().ket()).unwrap()).unwrap();
    let pom = sicseq(&["hw", "--dim", "2", "--fiducial", path_str(&fid)]);
    assert!(pom.status.success());
    let pom: Pom = serde_json::from_slice(&pom.stdout).unwrap();
    assert_eq!(pom.len(), 4);
    let scheme = sicseq(&["hw", "--dim", "2", "--fiducial", path_str(&fid), "--decompose"]);
    let scheme: SequentialScheme = serde_json::from_slice(&scheme.stdout).unwrap();
    assert_eq!(scheme.second().len(), 2);
    // dimension disagreement is an input error
    assert_eq!(sicseq(&["hw", "--dim", "3", "--fiducial", path_str(&fid)]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.json");
    fs::write(&junk, "{\"dim\": 2, \"labels\": [").unwrap();
    let out = sicseq(&["verify", "--pom", path_str(&junk)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("junk.json"));
    let missing = sicseq(&["verify", "--pom", "/nonexistent/pom.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));
    assert_eq!(sicseq(&["catalog", "--dim", "2", "--what", "nothing"]).status.code(), Some(2));
}

#[test]
fn tolerance_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_sicseq"))
        .args(["verify", "--pom", "tetrahedron"])
        .env("SICSEQ_TOL", "-3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let ok = Command::new(env!("CARGO_BIN_EXE_sicseq"))
        .args(["verify", "--pom", "tetrahedron"])
        .env("SICSEQ_TOL", "1e-12")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn fuzzy_check_fails_for_qutrit_plus_half() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ansatz.json");
    // lambda = 1/2 for d = 3 with Fourier bases everywhere is not a SIC
    let mut bases = Vec::new();
    for _ in 0..3 {
        let w = sicseq::linalg::root_of_unity;
        let kets: Vec<serde_json::Value> = (0..3)
            .map(|m| {
                let entries: Vec<[f64; 2]> = (0..3)
                    .map(|n| {
                        let z = w(3, (m * n) as i64) / 3f64.sqrt();
                        [z.re, z.im]
                    })
                    .collect();
                serde_json::json!({"dim": 3, "entries": entries})
            })
            .collect();
        bases.push(kets);
    }
    let text = serde_json::json!({"dim": 3, "lambda": 0.5, "bases": bases});
    fs::write(&path, text.to_string()).unwrap();
    let out = sicseq(&["fuzzy-check", "--scheme", path_str(&path)]);
    assert_eq!(out.status.code(), Some(1));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("cross") && l.contains("FAIL")));
    assert!(table.lines().any(|l| l.starts_with("sic") && l.contains("FAIL")));
}

#[test]
fn optics_counts_feed_tomography() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    let circuit = dir.path().join("circuit.json");
    let run = sicseq(&[
        "optics", "--scheme", "dim4", "--shots", "200000", "--seed", "3", "-o", path_str(&counts), "--circuit",
        path_str(&circuit),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv_text = fs::read_to_string(&counts).unwrap();
    assert!(csv_text.starts_with("label,count\n"));
    assert_eq!(csv_text.lines().count(), 17);
    let circuit: serde_json::Value = serde_json::from_str(&fs::read_to_string(&circuit).unwrap()).unwrap();
    assert_eq!(circuit["modes"], 16);

    let out = sicseq(&["tomography", "--pom", "dim4", "--counts", path_str(&counts), "--project-psd"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: TomographyReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.psd_projected);
    // the default input state is |0><0|
    assert!(report.reconstructed[(0, 0)].re > 0.95);
}

#[test]
fn tomography_self_test() {
    let out = sicseq(&["tomography", "--self-test", "--dim", "3", "--states", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(sicseq(&["tomography", "--pom", "tetrahedron"]).status.code(), Some(2));
}

#[test]
fn seeded_runs_are_identical() {
    let args = ["optics", "--scheme", "qutrit-family", "--gamma", "0.1", "--shots", "5000", "--seed", "11"];
    let (a, b) = (sicseq(&args), sicseq(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = sicseq(&["optics", "--scheme", "qutrit-family", "--gamma", "0.1", "--shots", "5000", "--seed", "12"]);
    assert_ne!(a.stdout, other.stdout);
}
