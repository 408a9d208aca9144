use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spectra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectra")).args(args).output().expect("spawn spectra")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn spectrum_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = spectra(&["spectrum", "--m-grid", "4", "--set", "lambda_mode=full", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with(r#"{"M":4,"lambda_size":16,"sigma_sq":["#));
    assert!(dir.path().join("spectrum.json").exists());
    assert!(dir.path().join("frame_set.csv").exists());
}

#[test]
fn explicit_frame_set_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lambda.csv");
    fs::write(&csv, "k,ell\n0,0\n1,2\n2,1\n3,3\n0,1\n").unwrap();
    let o = spectra(&[
        "spectrum",
        "--m-grid",
        "4",
        "--set",
        &format!("frame_set={}", csv.display()),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains(r#""lambda_size":5"#));
}

#[test]
fn validation_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(spectra(&["figure-singvals", "--trials", "1", "--out", out]).status.code(), Some(1));
    assert_eq!(spectra(&["figure-singvals", "--set", "nonsense=3", "--out", out]).status.code(), Some(1));
    assert_eq!(spectra(&["figure-singvals", "--seed", "0xZZ", "--out", out]).status.code(), Some(1));
    assert_eq!(spectra(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(spectra(&["spectrum", "--config", "/nonexistent/file.cfg"]).status.code(), Some(1));
}

#[test]
fn budget_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = spectra(&[
        "figure-trace",
        "--m-grid",
        "32",
        "--trials",
        "2",
        "--set",
        "trace_method=exact",
        "--set",
        "budget=1000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good");
    let o = spectra(&["verify", "--seed", "11", "--out", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = fs::read_to_string(good.join("verify.json")).unwrap();
    assert!(report.contains("\"all_pass\": true"));

    let bad = dir.path().join("bad");
    let o = spectra(&["verify", "--seed", "11", "--set", "fault_eigen_tolerance=0.5", "--out", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diagonal_spectrum_"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "m_grid=6\nf_size=4\ntrials=3\nseed=5\nout=/nonexistent/never\n").unwrap();
    let out = dir.path().join("o");
    let o = spectra(&[
        "figure-singvals",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "0x10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = fs::read_to_string(out.join("singvals_meta.json")).unwrap();
    assert!(meta.contains("\"seed\": 16"));
    let trials = fs::read_to_string(out.join("singvals_trials.csv")).unwrap();
    assert!(trials.starts_with("# schema=v1\r\n"));
    assert_eq!(trials.lines().count(), 2 + 3);
}

#[test]
fn outputs_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["figure-singvals", "--m-grid", "8,12", "--trials", "6"],
        &["figure-trace", "--m-grid", "6,8", "--trials", "5", "--set", "c=1,2"],
        &["figure-erasure", "--m-grid", "8", "--trials", "4", "--set", "f_size=3"],
        &["baseline-iid", "--m-grid", "6", "--trials", "4", "--set", "n_factors=2,4"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut runs = Vec::new();
        for threads in ["1", "4"] {
            let out = dir.path().join(format!("{i}-{threads}"));
            let mut full: Vec<&str> = args.to_vec();
            let out_s = out.to_str().unwrap().to_string();
            full.extend(["--threads", threads, "--out", &out_s]);
            let o = spectra(&full);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            runs.push(read_dir_sorted(&out));
        }
        assert_eq!(runs[0], runs[1], "{args:?}");
    }
}
