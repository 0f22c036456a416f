//! TAP iteration for the Sherrington-Kirkpatrick and Hopfield couplings, which
//! need a conjugate-gradient resolvent, with TAP residuals along the way.
//!
//! `cargo run --release --example ising_models`

use amp_lab::metrics::{seed_observables, ObservableReport};
use amp_lab::tap::{
    limiting_law, run_tap_with_params, solve_q_star, tap_state_evolution, Quadrature, TapEnsemble,
    TapOptions,
};

fn main() -> amp_lab::Result<()> {
    let (n, t_max, seeds, theta) = (1024, 8, 4u64, 1.0);
    let opts = TapOptions {
        hopfield_law_dim: 2048,
        ..TapOptions::default()
    };
    for (ens, beta) in [
        (TapEnsemble::Sk, 0.5),
        (TapEnsemble::Hopfield { phi: 2.0 }, 0.4),
    ] {
        let law = limiting_law(&ens, &opts)?;
        let p = solve_q_star(beta, theta, &law, Quadrature::default())?;
        let se = tap_state_evolution(&p, t_max, amp_lab::hermite::DEFAULT_DEGREE)?;
        println!(
            "\n{} (law {}), beta={beta} theta={theta}: q*={:.5} sigma*^2={:.5} lambda*={:.5} sigma_psi^2={:.5}",
            ens.label(),
            law.label(),
            p.q_star,
            p.sigma_star_sq,
            p.lambda_star,
            p.sigma_psi_sq
        );
        let mut obs = Vec::new();
        let mut residuals = vec![0.0; t_max + 1];
        for s in 1..=seeds {
            let r = run_tap_with_params(&ens, &p, n, t_max, s, &opts)?;
            for (a, b) in residuals.iter_mut().zip(&r.tap_residual) {
                *a += b / seeds as f64;
            }
            obs.push(seed_observables(&r.trace, &se.sigma_sq, s)?);
        }
        let rep = ObservableReport::aggregate(&ens.label(), beta, theta, n, &se, &obs)?;
        for row in &rep.rows {
            println!(
                "  t={:<2} succ_diff {:.4e}  d_t {:.4e}  TAP residual {:.3e}",
                row.t, row.succ_diff, row.d_pred, residuals[row.t]
            );
        }
    }
    Ok(())
}
