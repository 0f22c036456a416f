//! The seed-sweep harness used by the binary: runs a configuration, writes
//! the report and per-seed CSVs, and checks that a rerun is byte-identical.
//!
//! `cargo run --release --example experiment_harness`

use amp_lab::cli::{run_experiment, run_se, ExperimentConfig, RunMode, SeRequest};

fn main() -> amp_lab::Result<()> {
    let dir = std::env::temp_dir().join("amp-lab-harness");
    let mut cfg = ExperimentConfig::default();
    cfg.apply_file_text(
        "# TAP run on the signed Hadamard matrix\nensemble = signed-hadamard\nN = 2048\nT = 6\nseeds = 1..4\n",
        "inline",
    )?;
    cfg.mode = RunMode::Tap;
    cfg.output = Some(dir.join("tap.csv"));
    let out = run_experiment(&cfg)?;
    let first = std::fs::read(dir.join("tap.csv")).map_err(|e| amp_lab::Error::Io {
        path: dir.join("tap.csv"),
        source: e,
    })?;
    run_experiment(&cfg)?;
    let second = std::fs::read(dir.join("tap.csv")).map_err(|e| amp_lab::Error::Io {
        path: dir.join("tap.csv"),
        source: e,
    })?;
    print!("{}", out.report.to_csv());
    println!("rerun byte-identical: {}", first == second);

    let warm = ExperimentConfig {
        ensemble: "signed-sine".into(),
        n: 2048,
        t_max: 3,
        seeds: vec![1, 2, 3],
        mode: RunMode::Projected,
        nonlinearity: "tanh-centered".into(),
        output: Some(dir.join("cubic.csv")),
        ..ExperimentConfig::default()
    };
    print!("\n{}", run_experiment(&warm)?.report.to_csv());

    print!(
        "\n{}",
        run_se(&SeRequest {
            preset: "square".into(),
            t_max: 4,
            ..SeRequest::default()
        })?
    );
    println!("\nfiles in {}", dir.display());
    Ok(())
}
