use std::io::Write;
use std::process::{Command, Output};

fn superres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superres"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Rows of a CSV body: skips `#` lines and the column header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn columns(text: &str) -> Vec<String> {
    let line = text.lines().find(|l| !l.starts_with('#')).unwrap();
    line.split(',').map(str::to_string).collect()
}

fn value(text: &str, key: &str) -> f64 {
    rows(text).iter().find(|r| r[0] == key).unwrap()[1].parse().unwrap()
}

#[test]
fn moments_for_two_widths() {
    assert_eq!(value(&stdout(&superres(&["moments"])), "p2"), 0.25);
    assert_eq!(value(&stdout(&superres(&["moments", "--sigma", "2"])), "p2"), 0.0625);
}

#[test]
fn header_records_version_hash_seed_and_units() {
    let text = stdout(&superres(&[
        "simulate", "--shots", "1000", "--reps", "2", "--seed", "9",
    ]));
    let header = text.lines().next().unwrap();
    assert!(header.starts_with(&format!(
        "# superres {} cmd=simulate config=",
        env!("CARGO_PKG_VERSION")
    )));
    assert!(header.contains(" seed=9 "));
    assert!(header.contains("units=length:sigma"));
    let hash = header.split("config=").nth(1).unwrap().split(' ').next().unwrap();
    assert_eq!(hash.len(), 16);
    let other = stdout(&superres(&[
        "simulate", "--shots", "1000", "--reps", "2", "--seed", "10",
    ]));
    assert_ne!(other.lines().next().unwrap(), header);
}

#[test]
fn missing_psf_file_is_a_validation_failure() {
    let out = superres(&["moments", "--psf-file", "/nonexistent/psf.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_psf_file_is_a_validation_failure() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "x,amplitude\n0,1\n0.1,abc").unwrap();
    let out = superres(&["moments", "--psf-file", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sampled_psf_file_round_trip() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "# gaussian, sigma 1").unwrap();
    writeln!(file, "x,amplitude").unwrap();
    let n = 2048;
    for i in 0..n {
        let x = -8.0 + 16.0 * i as f64 / (n - 1) as f64;
        let a = (2.0 * std::f64::consts::PI).powf(-0.25) * (-x * x / 4.0).exp();
        writeln!(file, "{x},{a}").unwrap();
    }
    let text = stdout(&superres(&["moments", "--psf-file", file.path().to_str().unwrap()]));
    assert!(text.lines().next().unwrap().contains("units=length:raw"));
    assert!((value(&text, "p2") - 0.25).abs() < 1e-6);
    assert!((value(&text, "p4") - 0.1875).abs() < 1e-4);
}

#[test]
fn povm_modes_are_orthonormal_and_match_hermite_gauss() {
    let text = stdout(&superres(&["modes", "--alpha", "pi/4", "--beta", "pi/6"]));
    assert_eq!(columns(&text), ["x", "pi1", "pi2", "phi1", "phi2", "phi3"]);
    let data: Vec<Vec<f64>> = rows(&text)
        .iter()
        .map(|r| r.iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    let h = data[1][0] - data[0][0];
    let inner = |a: usize, b: usize| -> f64 {
        let n = data.len();
        let sum: f64 = data.iter().map(|r| r[a] * r[b]).sum();
        h * (sum - 0.5 * (data[0][a] * data[0][b] + data[n - 1][a] * data[n - 1][b]))
    };
    assert!((inner(1, 1) - 1.0).abs() < 1e-8);
    assert!((inner(2, 2) - 1.0).abs() < 1e-8);
    assert!(inner(1, 2).abs() < 1e-8);
    // pi1 = (HG1 + HG2) / sqrt(2) up to a global sign
    let hg = |n: i32, x: f64| {
        let psi = (2.0 * std::f64::consts::PI).powf(-0.25) * (-x * x / 4.0).exp();
        let t = x / std::f64::consts::SQRT_2;
        match n {
            1 => 2.0 * t / 2f64.sqrt() * psi,
            _ => (4.0 * t * t - 2.0) / 8f64.sqrt() * psi,
        }
    };
    let err = |sign: f64| {
        data.iter()
            .map(|r| (r[1] - sign * (hg(1, r[0]) + hg(2, r[0])) / 2f64.sqrt()).abs())
            .fold(0.0, f64::max)
    };
    assert!(err(1.0).min(err(-1.0)) < 1e-8);
}

#[test]
fn modes_without_povm_list_only_the_basis() {
    let text = stdout(&superres(&["modes", "--n-modes", "4"]));
    assert_eq!(columns(&text), ["x", "phi1", "phi2", "phi3", "phi4"]);
}

#[test]
fn tradeoff_scan_saturates() {
    let text = stdout(&superres(&["tradeoff-scan"]));
    assert_eq!(
        columns(&text),
        [
            "alpha",
            "eps_s_sq",
            "eps_s0_sq",
            "regret_s_sq",
            "regret_s0_sq",
            "regret_sum"
        ]
    );
    let data = rows(&text);
    assert_eq!(data.len(), 19);
    for r in &data {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        assert!((v[1] + v[2] - 1.0).abs() < 1e-12);
        if (v[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-9 {
            assert!((v[5] - 1.0).abs() < 1e-3);
        }
    }
}

#[test]
fn boundary_alpha_rejected() {
    let out = superres(&["tradeoff-scan", "--alphas", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn fig2_limits_and_ordering() {
    let text = stdout(&superres(&["fig2", "--scan-s", "0.01:1:3"]));
    assert_eq!(columns(&text), ["s", "beta", "F_s0s0", "F_ss", "Q_s0s0", "Q_ss"]);
    let data: Vec<Vec<f64>> = rows(&text)
        .iter()
        .map(|r| r.iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(data.len(), 12);
    for r in &data {
        assert!((r[5] - 0.25).abs() < 1e-3);
        if r[0] == 0.01 {
            assert!((r[3] / 0.125 - 1.0).abs() < 1e-2);
        }
    }
    let at_one: Vec<&Vec<f64>> = data.iter().filter(|r| r[0] == 1.0).collect();
    assert!(at_one.first().unwrap()[3] > at_one.last().unwrap()[3]);
}

#[test]
fn invalid_povm_reports_and_exits_2() {
    let out = superres(&["povm-check", "--coeffs", "0.9,0,0.9,0.3,0"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("valid,false"));
}

#[test]
fn conflicting_psf_sources_rejected() {
    let out = superres(&["moments", "--sigma", "2", "--psf-file", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn too_small_separation_is_a_validation_failure() {
    let out = superres(&["cfi", "--s", "1e-8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn support_overflow_is_a_validation_failure() {
    let out = superres(&["probs", "--s", "6"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_repetition_is_flagged() {
    let text = stdout(&superres(&["simulate", "--shots", "10000", "--reps", "1"]));
    assert_eq!(columns(&text), ["rep", "s0_hat", "s_hat", "loglik", "converged"]);
    assert_eq!(rows(&text).len(), 1);
    assert!(text.contains("# covariance,unavailable"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("probs.csv");
    let out = superres(&["probs", "--s", "0.4", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    let p1: f64 = rows(&text)[0][3].parse().unwrap();
    assert!((p1 - 4.97500e-3).abs() < 1e-8);
}

#[test]
fn scaled_width_reports_lengths_in_sigma() {
    let a = stdout(&superres(&["probs", "--s", "0.4"]));
    let b = stdout(&superres(&["probs", "--s", "0.4", "--sigma", "3"]));
    let (ra, rb) = (rows(&a), rows(&b));
    assert_eq!(ra[0][0], rb[0][0]);
    let (pa, pb): (f64, f64) = (ra[0][3].parse().unwrap(), rb[0][3].parse().unwrap());
    assert!((pa - pb).abs() < 1e-10);
}
