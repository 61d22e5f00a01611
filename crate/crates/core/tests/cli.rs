//! End-to-end checks of the command-line interface: exit codes, report
//! contents and export determinism.

use std::process::Command;

fn railqubo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_railqubo"))
}

#[test]
fn solve_enumerate_line216_reports_ground() {
    let dir = tempdir("enumerate");
    let out = railqubo()
        .args([
            "solve",
            "--instance",
            "line216",
            "--method",
            "enumerate",
            "--p-sum",
            "1.75",
            "--p-pair",
            "1.75",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(format!("{dir}/report.txt")).unwrap();
    assert!(report.contains("energy: -9.285714286"), "{report}");
    assert!(report.contains("ground_degeneracy: 4"), "{report}");
    assert!(report.contains("feasible: true"), "{report}");
    assert!(std::path::Path::new(&format!("{dir}/spectrum.txt")).exists());
    assert!(std::path::Path::new(&format!("{dir}/diagram.svg")).exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_amcc_line216() {
    let out = railqubo()
        .args(["solve", "--instance", "line216", "--method", "amcc"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    // The AMCC schedule is the published one: objective 8.5/7.
    assert!(text.contains("objective: 1.214285714"), "{text}");
    assert!(text.contains("feasible: true"));
}

#[test]
fn bogus_method_is_usage_error() {
    let out = railqubo()
        .args(["solve", "--instance", "line216", "--method", "bogus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_instance_fails() {
    let out = railqubo()
        .args(["solve", "--instance", "/no/such/file.rail", "--method", "fcfs"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn infeasible_bounds_exit_2() {
    let out = railqubo()
        .args([
            "solve",
            "--instance",
            "crossing",
            "--method",
            "order",
            "--d-max",
            "0",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_qubo_crossing_matches_published_matrix() {
    let out = railqubo()
        .args(["export", "--instance", "crossing", "--format", "qubo"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let imported = railqubo::io::export::read_qubo(&text).unwrap();
    assert_eq!(imported.n, 4);
    let expected = [
        [-1.75, 1.75, 1.75, 0.0],
        [1.75, -1.25, 0.0, 1.75],
        [1.75, 0.0, -1.75, 1.75],
        [0.0, 1.75, 1.75, -0.75],
    ];
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(imported.matrix[i * 4 + j], expected[i][j]);
        }
    }
}

#[test]
fn export_is_byte_identical_across_runs() {
    let run = || {
        railqubo()
            .args(["export", "--instance", "line216", "--format", "ising"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn diagram_views() {
    let dir = tempdir("diagram");
    let out = railqubo()
        .args([
            "diagram",
            "--instance",
            "line216",
            "--view",
            "conflicted",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let svg = std::fs::read_to_string(format!("{dir}/diagram.svg")).unwrap();
    // The conflicted view of line 216 highlights the block-4 overlap.
    assert!(svg.contains("#ff1744"));

    let out = railqubo()
        .args([
            "diagram",
            "--instance",
            "line216",
            "--view",
            "timetable",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let svg = std::fs::read_to_string(format!("{dir}/diagram.svg")).unwrap();
    assert!(!svg.contains("#ff1744"));
    std::fs::remove_dir_all(&dir).ok();
}

fn tempdir(tag: &str) -> String {
    let dir = std::env::temp_dir().join(format!("railqubo-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.to_string_lossy().into_owned()
}
