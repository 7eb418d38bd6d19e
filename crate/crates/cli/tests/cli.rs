//! End-to-end tests of the command-line interface: exit codes, output
//! formats, and the scenario front end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tetpart::mesh::{generate_box_mesh, save_mesh};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tetpart")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn write_box_mesh(
    dir: &Path,
    name: &str,
    nx: usize,
    ny: usize,
    nz: usize,
    dims: (f64, f64, f64),
) -> PathBuf {
    let mesh = generate_box_mesh(nx, ny, nz, dims).unwrap();
    let path = dir.join(name);
    save_mesh(&mesh, &path).unwrap();
    path
}

#[test]
fn partition_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_box_mesh(dir.path(), "in.mesh", 2, 2, 2, (1.0, 1.0, 1.0));
    let csv_path = dir.path().join("parts.csv");
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "partition",
        "--method",
        "rtk",
        "--p",
        "4",
        "--out",
        csv_path.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
        mesh.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("element_id,part\n"));
    assert!(csv.ends_with('\n'));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 48);
    for row in rows {
        let (_, part) = row.split_once(',').unwrap();
        let part: usize = part.parse().unwrap();
        assert!(part < 4);
    }

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["p"], 4);
    assert!(report["imbalance"].as_f64().unwrap() >= 1.0);
}

#[test]
fn partition_rejects_bad_flags_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_box_mesh(dir.path(), "in.mesh", 1, 1, 1, (1.0, 1.0, 1.0));
    let out = run(&["partition", "--p", "0", mesh.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "partition",
        "--p",
        "2",
        "--method",
        "bogus",
        mesh.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_exits_1_and_names_the_path() {
    let out = run(&["partition", "--p", "2", "/no/such/file.mesh"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("/no/such/file.mesh"), "{stderr}");
}

#[test]
fn malformed_mesh_exits_1_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.mesh");
    std::fs::write(&path, "tetmesh v1\n4 1\n0 0 0\n1 0 0\n").unwrap();
    let out = run(&["partition", "--p", "2", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line"), "{stderr}");
}

#[test]
fn sfc_dump_modes_differ_on_elongated_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_box_mesh(dir.path(), "long.mesh", 8, 1, 1, (8.0, 1.0, 1.0));
    let dump = |mode: &str| -> String {
        let out = run(&[
            "sfc-dump",
            "--method",
            "hilbert",
            "--mode",
            mode,
            "--order",
            "10",
            mesh.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let preserve = dump("preserve");
    let stretch = dump("stretch");
    assert!(preserve.starts_with("element_id,key\n"));
    assert!(preserve.ends_with('\n'));
    assert_eq!(preserve.lines().count(), 49);
    assert_ne!(preserve, stretch);

    // order 22 is a usage error
    let out = run(&["sfc-dump", "--order", "22", mesh.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    // rtk is not a curve
    let out = run(&["sfc-dump", "--method", "rtk", mesh.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_tet_dump_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("single.mesh");
    std::fs::write(
        &path,
        "tetmesh v1\n4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3 1.0\n",
    )
    .unwrap();
    let out = run(&["sfc-dump", path.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
}

#[test]
fn bench_runs_scenarios_and_validates_them() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.scenario");
    std::fs::write(
        &path,
        "mesh = box 2 2 2 1 1 1\nindicator = moving_peak\nsteps = 3\nrefine_fraction = 0.1\np = 2\nmethod = morton\n",
    )
    .unwrap();
    let jsonl = dir.path().join("records.jsonl");
    let out = run(&[
        "bench",
        "--out",
        jsonl.to_str().unwrap(),
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&jsonl).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(record["element_count"].as_u64().unwrap() > 0);
        assert!(record["report"]["imbalance"].as_f64().unwrap() >= 1.0);
    }
    // summary goes to stderr
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("mean imbalance"));

    // steps = 0 is a usage error (exit 2)
    std::fs::write(
        &path,
        "mesh = box 2 2 2 1 1 1\nsteps = 0\np = 2\nmethod = rtk\n",
    )
    .unwrap();
    let out = run(&["bench", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // missing scenario file is a runtime error (exit 1)
    let out = run(&["bench", "/no/such.scenario"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("same.scenario");
    std::fs::write(
        &path,
        "mesh = box 3 3 3 1 1 1\nindicator = moving_peak\nsteps = 5\nrefine_fraction = 0.08\ncoarsen_fraction = 0.02\np = 4\nmethod = hilbert\nseed = 3\n",
    )
    .unwrap();
    let first = run(&["bench", path.to_str().unwrap()]);
    let second = run(&["bench", path.to_str().unwrap()]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn inputs_are_never_mutated() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_box_mesh(dir.path(), "keep.mesh", 2, 1, 1, (2.0, 1.0, 1.0));
    let before = std::fs::read(&mesh).unwrap();
    run(&["partition", "--p", "2", mesh.to_str().unwrap()]);
    run(&["sfc-dump", mesh.to_str().unwrap()]);
    assert_eq!(before, std::fs::read(&mesh).unwrap());
}
