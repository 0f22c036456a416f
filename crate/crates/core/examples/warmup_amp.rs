//! Two steps of `z <- M f(z)` with `f(x) = x^2/sqrt(3)` on the signed sine
//! matrix: the empirical mean of `z^2` vanishes as `N` grows.
//!
//! `cargo run --release --example warmup_amp`

use amp_lab::amp::{gaussian_init, run_amp, AmpMode};
use amp_lab::ensembles::build_signed_sine;
use amp_lab::state_evolution::Nonlinearity;

fn main() -> amp_lab::Result<()> {
    let f = Nonlinearity::square();
    for n in [1024, 4096, 16384] {
        let seeds = 32u64;
        let mut means = Vec::new();
        for s in 1..=seeds {
            let op = build_signed_sine(n, s)?;
            let tr = run_amp(
                &op,
                &[f.clone(), f.clone()],
                gaussian_init(n, 1.0, s),
                2,
                AmpMode::Simple,
            )?;
            means.push(tr.iterates[2].iter().sum::<f64>() / n as f64);
        }
        let avg = means.iter().sum::<f64>() / seeds as f64;
        let spread = means.iter().map(|m| m.abs()).fold(0.0, f64::max);
        println!("N={n:>6}: mean over {seeds} seeds of (1/N) sum z^2_i = {avg:+.5}   max |.| = {spread:.5}");
    }
    Ok(())
}
