use std::process::{Command, Output};

use amp_lab::metrics::{ObservableReport, REPORT_COLUMNS};

fn amp_lab(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_amp-lab"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("AMP_LAB_THREADS", t),
        None => cmd.env_remove("AMP_LAB_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

const TAP_ARGS: [&str; 13] = [
    "tap",
    "--ensemble",
    "signed-sine",
    "--N",
    "4096",
    "--T",
    "10",
    "--beta",
    "2",
    "--theta",
    "2",
    "--seeds",
    "1..8",
];

#[test]
fn tap_report_has_ten_rows_and_comments() {
    let text = stdout(&amp_lab(&TAP_ARGS, None));
    let lines: Vec<&str> = text.lines().collect();
    let comments = lines.iter().take_while(|l| l.starts_with('#')).count();
    assert!(comments >= 1);
    assert_eq!(lines[comments], REPORT_COLUMNS);
    assert_eq!(lines.len() - comments - 1, 10);
    let report = ObservableReport::parse_csv(&text).unwrap();
    assert_eq!(report.seed_count, 8);
    assert_eq!(report.rows.len(), 10);
}

#[test]
fn output_is_identical_across_thread_counts() {
    let args = [
        "tap",
        "--ensemble",
        "random-orthogonal",
        "--N",
        "1024",
        "--T",
        "5",
        "--beta",
        "4",
        "--theta",
        "2",
        "--seeds",
        "1..6",
    ];
    let one = stdout(&amp_lab(&args, Some("1")));
    let three = stdout(&amp_lab(&args, Some("3")));
    assert_eq!(one, three);
    assert_eq!(one, stdout(&amp_lab(&args, None)));
}

#[test]
fn run_writes_report_and_seed_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let o = amp_lab(
        &[
            "run",
            "--ensemble",
            "signed-hadamard",
            "--N",
            "256",
            "--T",
            "3",
            "--seeds",
            "2,5",
            "--mode",
            "projected",
            "--nonlinearity",
            "tanh-centered",
            "--trace",
            "--output",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert!(stdout(&o).is_empty());
    let report = ObservableReport::parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 3);
    for seed in [2, 5] {
        assert!(dir.path().join(format!("report.seed{seed}.csv")).exists());
        assert!(dir
            .path()
            .join(format!("report.seed{seed}.trace.csv"))
            .exists());
    }
}

#[test]
fn config_file_is_applied_before_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(
        &cfg,
        "# warm-up\nensemble = signed-sine\nN = 128\nT = 2\nseeds = 1..3\nnonlinearity = square\n",
    )
    .unwrap();
    let text = stdout(&amp_lab(
        &["run", "--config", cfg.to_str().unwrap(), "--T", "4"],
        None,
    ));
    let report = ObservableReport::parse_csv(&text).unwrap();
    assert_eq!((report.n, report.t_max, report.seed_count), (128, 4, 3));
}

#[test]
fn se_tap_variance_is_constant() {
    let text = stdout(&amp_lab(
        &[
            "se", "--preset", "tap", "--beta", "2", "--theta", "2", "--T", "10",
        ],
        None,
    ));
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 11);
    let s0: f64 = rows[0][1].parse().unwrap();
    for r in &rows {
        let s: f64 = r[1].parse().unwrap();
        assert!((s - s0).abs() <= 1e-6, "{s} vs {s0}");
    }
}

#[test]
fn check_ensemble_reports_sine_entries() {
    let text = stdout(&amp_lab(
        &["check-ensemble", "--ensemble", "signed-sine", "--N", "512"],
        None,
    ));
    let field = text
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("psi_inf_norm="))
        .expect("psi_inf_norm field");
    let got: f64 = field.parse().unwrap();
    let want = 2.0 / 1025f64.sqrt();
    assert!((got - want).abs() <= 1e-3 * want, "{got} vs {want}");
}

#[test]
fn failures_emit_one_error_record() {
    let o = amp_lab(
        &[
            "run",
            "--ensemble",
            "no-such-ensemble",
            "--N",
            "64",
            "--T",
            "2",
        ],
        None,
    );
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=invalid_argument "), "{err}");
    assert!(o.stdout.is_empty());

    let o = amp_lab(
        &[
            "tap",
            "--ensemble",
            "signed-hadamard",
            "--N",
            "100",
            "--T",
            "2",
        ],
        None,
    );
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .starts_with("error kind="));
}
