//! End-to-end tests of the `entweb` binary: exit codes, output shapes,
//! and byte-level reproducibility.

use entweb_core::fileio::{qdm_string, qsv_string};
use entweb_core::qstate::dicke_state;
use entweb_core::Complex64;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entweb")).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entweb"))
        .args(args)
        .env(key, val)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_w3(dir: &Path) -> String {
    let path = dir.join("w3.qsv");
    std::fs::write(&path, qsv_string(&dicke_state(3, 1).unwrap())).unwrap();
    path.to_str().unwrap().to_string()
}

/// Value of a `key = <real>` line in a printed report.
fn report_value(text: &str, key: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(key) && l[key.len()..].trim_start().starts_with('='))
        .unwrap_or_else(|| panic!("no `{key} =` line in:\n{text}"));
    let v = line.split('=').nth(1).unwrap().trim();
    v.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn concurrence_of_w3_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_w3(dir.path());
    let out = run(&["concurrence", &path]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!((report_value(&text, "C") - 2.0 / 3.0).abs() < 1e-10);
    assert!(text.contains("marginal-uniform = yes"));
    assert!(text.contains("A0 = 0.00000000000e0"));
}

#[test]
fn concurrence_of_separable_and_bell_states() {
    let dir = tempfile::tempdir().unwrap();
    let mut amps = vec![Complex64::ZERO; 8];
    amps[0] = Complex64::new(1.0, 0.0);
    let basis = dir.path().join("basis.qsv");
    std::fs::write(
        &basis,
        "qsv 1 3\n1 0\n0 0\n0 0\n0 0\n0 0\n0 0\n0 0\n0 0\n",
    )
    .unwrap();
    let out = run(&["concurrence", basis.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(report_value(&stdout(&out), "C"), 0.0);

    let bell = dir.path().join("bell.qsv");
    std::fs::write(&bell, qsv_string(&dicke_state(2, 1).unwrap())).unwrap();
    let out = run(&["concurrence", bell.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!((report_value(&stdout(&out), "C") - 1.0).abs() < 1e-10);
}

#[test]
fn concurrence_accepts_density_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w3.qdm");
    std::fs::write(&path, qdm_string(&dicke_state(3, 1).unwrap().density())).unwrap();
    let out = run(&["concurrence", path.to_str().unwrap(), "--pair", "2,3"]);
    assert_eq!(code(&out), 0);
    assert!((report_value(&stdout(&out), "C") - 2.0 / 3.0).abs() < 1e-10);
}

#[test]
fn exit_codes_separate_usage_from_validity() {
    let dir = tempfile::tempdir().unwrap();
    let truncated = dir.path().join("bad.qsv");
    std::fs::write(&truncated, "qsv 1 2\n1 0\n").unwrap();
    assert_eq!(code(&run(&["concurrence", truncated.to_str().unwrap()])), 2);

    let non_psd = dir.path().join("npsd.qdm");
    std::fs::write(&non_psd, "qdm 1 2\n0 0 1.5 0\n1 1 -0.5 0\n").unwrap();
    assert_eq!(code(&run(&["concurrence", non_psd.to_str().unwrap()])), 3);

    let w3 = write_w3(dir.path());
    assert_eq!(code(&run(&["concurrence", &w3, "--pair", "0,2"])), 2);
    assert_eq!(code(&run(&["concurrence", dir.path().join("nope.qsv").to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["web", "w", "--n", "13"])), 2);
    assert_eq!(code(&run(&["verify-bound", "--n", "8..3"])), 2);
}

#[test]
fn verify_bound_is_reproducible_and_thread_independent() {
    let args = ["verify-bound", "--n", "3..4", "--grid-depth", "12", "--seed", "1"];
    let a = run(&args);
    assert_eq!(code(&a), 0, "stderr: {}", String::from_utf8_lossy(&a.stderr));
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout, "same config must be byte-identical");
    let c = run_env(&args, "ENTWEB_THREADS", "1");
    assert_eq!(a.stdout, c.stdout, "thread count must not change output");

    let text = stdout(&a);
    let mut rows = 0;
    for line in text.lines().skip(2) {
        let cells: Vec<&str> = line.split(',').collect();
        let gap: f64 = cells[3].parse().unwrap();
        assert!(gap.abs() <= 1e-6, "row {line}");
        rows += 1;
    }
    assert_eq!(rows, 2);
}

#[test]
fn region_reports_exact_vertex_values() {
    let out = run(&[
        "region", "--n", "3", "--a", "0.5,0.5,2", "--a0", "0", "--resolution", "6",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let psz = text
        .lines()
        .find(|l| l.contains("P_SZ"))
        .expect("P_SZ row present");
    let cells: Vec<&str> = psz.split(',').collect();
    let gamma: f64 = cells[5].parse().unwrap();
    assert!((gamma - 2.0).abs() < 1e-9, "gamma at the moment cap: {gamma}");
    // Vertex rows sit on their defining surfaces.
    for line in text.lines().filter(|l| l.starts_with("vertex,P_A")) {
        let c: Vec<&str> = line.split(',').collect();
        let fa: f64 = c[6].parse().unwrap();
        assert!(fa.abs() < 1e-10, "f_a off the plane: {line}");
    }
    for line in text.lines().filter(|l| l.starts_with("vertex,P_S")) {
        let c: Vec<&str> = line.split(',').collect();
        let fs: f64 = c[7].parse().unwrap();
        assert!(fs.abs() < 1e-10, "f_s off the plane: {line}");
    }
}

#[test]
fn region_arrows_point_up_the_x_slope_when_all_b_positive() {
    let out = run(&[
        "region", "--n", "5", "--a", "2,1.7,1.3", "--a0", "0", "--resolution", "6",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut arrows = 0;
    for line in text.lines().filter(|l| l.starts_with("arrow,")) {
        let c: Vec<&str> = line.split(',').collect();
        let gx: f64 = c[9].parse().unwrap();
        assert!(gx > 0.0, "non-positive X slope: {line}");
        arrows += 1;
    }
    assert!(arrows > 0, "no arrow rows emitted");
}

#[test]
fn web_w_matches_reference() {
    let out = run(&["web", "w", "--n", "5"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("concurrence = 4.00000000000e-1"));
    assert!(text.contains("verdict = pass"));
}

#[test]
fn web_ring_formula_only_skips_search() {
    let out = run(&["web", "ring", "--half-n", "2", "--formula-only"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("formula = 5.00000000000e-1"));
    assert!(!text.contains("search"));
}

#[test]
fn web_ring_search_reaches_the_formula() {
    let out = run(&["web", "ring", "--half-n", "2", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("verdict = reached"));
    assert!(report_value(&text, "search best") >= 0.5 - 1e-3);
}

#[test]
fn random_check_histogram_and_empty_run() {
    let args = ["random-check", "--n", "3", "--samples", "60", "--seed", "7"];
    let a = run(&args);
    assert_eq!(code(&a), 0);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let counted: usize = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("bin_lo"))
        .map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(counted, 60);

    let empty = run(&["random-check", "--n", "3", "--samples", "0", "--seed", "7"]);
    assert_eq!(code(&empty), 0);
    let text = stdout(&empty);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("bin_lo"));
    assert!(lines.iter().skip(1).all(|l| l.starts_with('#')), "no data rows expected");
}

#[test]
fn random_check_symmetric_draws_have_no_singlet_weight() {
    let out = run(&[
        "random-check", "--n", "4", "--samples", "40", "--seed", "2", "--symmetric-pure",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("bin_lo")) {
        let a0: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(a0.abs() < 1e-9, "singlet weight leaked: {line}");
    }
}

#[test]
fn tsv_format_and_out_file_match_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let to_stdout = run(&["verify-bound", "--n", "3", "--grid-depth", "8", "--format", "tsv"]);
    assert_eq!(code(&to_stdout), 0);
    let text = stdout(&to_stdout);
    assert!(text.lines().next().unwrap().contains('\t'));

    let path = dir.path().join("vb.tsv");
    let to_file = run(&[
        "verify-bound", "--n", "3", "--grid-depth", "8", "--format", "tsv", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&to_file), 0);
    assert!(to_file.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}
