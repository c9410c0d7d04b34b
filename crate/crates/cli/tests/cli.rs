use std::fs;
use std::path::Path;
use std::process::Command;

const HEADER: &str =
    "step,nelems,ndofs,hmax,hmin,rho,mkhp,eta_check,eta,osc,err_ht,solvable,seconds";

fn helmdg(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_helmdg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

fn run_into(dir: &Path, extra: &[&str]) -> String {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", "--out", out];
    args.extend_from_slice(extra);
    let o = helmdg(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(dir.join("history.csv")).unwrap()
}

#[test]
fn uniform_plane_wave_history() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_into(
        dir.path(),
        &[
            "--example",
            "plane-wave",
            "--k",
            "5",
            "--p",
            "1",
            "--refine",
            "uniform",
            "--max-steps",
            "6",
        ],
    );
    assert_eq!(csv.lines().next().unwrap(), HEADER);
    assert_eq!(csv.lines().count(), 8);
    let err = column(&csv, "err_ht");
    assert!(err[6] < err[5] && err[5] < err[4]);
    let nel = column(&csv, "nelems");
    assert!(nel.windows(2).all(|w| w[1] == 4.0 * w[0]));
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "--example",
        "lshape-bessel",
        "--k",
        "4",
        "--p",
        "2",
        "--max-steps",
        "4",
        "--no-timing",
        "--dump-meshes",
        "--dump-elements",
    ];
    let ca = run_into(a.path(), &args);
    let cb = run_into(b.path(), &args);
    assert_eq!(ca, cb);
    for name in ["mesh_004.txt", "elements_004.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
    let elements = fs::read_to_string(a.path().join("elements_000.csv")).unwrap();
    assert_eq!(
        elements.lines().next().unwrap(),
        "id,eta_r,eta_e,eta_j,eta,eta_check,osc"
    );
}

#[test]
fn piecewise_run_without_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_into(
        dir.path(),
        &[
            "--example",
            "piecewise-k",
            "--k1",
            "3",
            "--k2",
            "1",
            "--variant",
            "g2",
            "--init-res",
            "2",
            "--max-steps",
            "2",
        ],
    );
    let row = csv.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(10), Some(""));
}

#[test]
fn invalid_arguments_fail() {
    for args in [
        vec!["run", "--example", "nope"],
        vec!["run", "--example", "plane-wave", "--theta", "1.5"],
        vec!["run", "--example", "plane-wave", "--p", "0"],
        vec!["run", "--example", "plane-wave", "--k", "-1"],
    ] {
        let o = helmdg(&args);
        assert!(!o.status.success(), "{args:?} should fail");
    }
}

#[test]
fn verify_passes_and_detects_corruption() {
    let o = helmdg(&["verify", "--seed", "3"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    let o = helmdg(&["verify", "--corrupt-quadrature"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL quadrature exactness"));
}
