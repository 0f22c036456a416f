//! Seed-to-seed variance of `(1/N) Σ z_i^1 z_i^2` for the TAP iteration on the
//! signed sine matrix at several `N`; the variance roughly halves when `N`
//! doubles.
//!
//! `cargo run --release --example concentration -- [seeds]`

use amp_lab::metrics::{coordinate_product_mean, sample_variance};
use amp_lab::spectral::SpectralLaw;
use amp_lab::tap::{run_tap_with_params, solve_q_star, Quadrature, TapEnsemble, TapOptions};

fn main() -> amp_lab::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(32);
    let p = solve_q_star(2.0, 2.0, &SpectralLaw::rademacher(), Quadrature::default())?;
    let mut prev: Option<f64> = None;
    for n in [1024, 2048, 4096, 8192] {
        let vals = (1..=seeds)
            .map(|s| {
                let r = run_tap_with_params(
                    &TapEnsemble::SignedSine,
                    &p,
                    n,
                    2,
                    s,
                    &TapOptions::default(),
                )?;
                coordinate_product_mean(&r.trace, 1, 2)
            })
            .collect::<amp_lab::Result<Vec<_>>>()?;
        let v = sample_variance(&vals);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        match prev {
            Some(pv) => println!(
                "N={n:>5}: mean {mean:.6}  var {v:.3e}  ratio to N/2 = {:.3}",
                pv / v
            ),
            None => println!("N={n:>5}: mean {mean:.6}  var {v:.3e}"),
        }
        prev = Some(v);
    }
    Ok(())
}
