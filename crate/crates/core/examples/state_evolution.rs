//! State evolution of the memory-free iteration: variances, correlations and
//! predicted successive differences for a preset and for the TAP choice.
//!
//! `cargo run --release --example state_evolution`

use amp_lab::spectral::SpectralLaw;
use amp_lab::state_evolution::{run_state_evolution_with, Nonlinearity, SeOptions};
use amp_lab::tap::{solve_q_star, tap_state_evolution, Quadrature};

fn main() -> amp_lab::Result<()> {
    let f = Nonlinearity::preset("tanh-centered")?;
    let se = run_state_evolution_with(
        &[f],
        1.0,
        25.0,
        6,
        SeOptions {
            cross_check: true,
            ..SeOptions::default()
        },
    )?;
    println!("centered tanh, sigma0^2 = 1, sigma_psi^2 = 25");
    let d = se.successive_diff();
    for (t, (s2, dt)) in se.sigma_sq.iter().zip(&d).enumerate() {
        println!("  t={t}  sigma^2 = {s2:.10}  d_t = {dt:.10}");
    }
    println!(
        "  min eigenvalue of Sigma_T = {:.3e}, quadrature cross-check {:.2e}",
        se.min_eigenvalue(),
        se.cross_check_max_dev.unwrap_or(f64::NAN)
    );

    for beta in [2.0, 4.0, 10.0] {
        let p = solve_q_star(beta, 2.0, &SpectralLaw::rademacher(), Quadrature::default())?;
        let se = tap_state_evolution(&p, 10, amp_lab::hermite::DEFAULT_DEGREE)?;
        let dev = se
            .sigma_sq
            .iter()
            .map(|s| (s - p.sigma_star_sq).abs())
            .fold(0.0, f64::max);
        let d = se.successive_diff();
        println!(
            "\nTAP beta={beta}: q*={:.6} sigma*^2={:.6} lambda*={:.6} sigma_psi^2={:.6}  max|sigma_t^2 - sigma*^2| = {dev:.1e}",
            p.q_star, p.sigma_star_sq, p.lambda_star, p.sigma_psi_sq
        );
        println!(
            "  d_t: {}",
            d[1..]
                .iter()
                .map(|x| format!("{x:.4e}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    Ok(())
}
