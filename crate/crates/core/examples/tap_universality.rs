//! Successive differences of the TAP iteration on three involution ensembles
//! against the state-evolution curve, with Hermite moments and KS distances
//! of the final iterate.
//!
//! `cargo run --release --example tap_universality -- [N] [seeds]`

use amp_lab::metrics::{seed_observables, succ_diff_spread, ObservableReport};
use amp_lab::spectral::SpectralLaw;
use amp_lab::tap::{
    run_tap_with_params, solve_q_star, tap_state_evolution, Quadrature, TapEnsemble, TapOptions,
};

fn main() -> amp_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4096);
    let seeds: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);
    let (theta, t_max) = (2.0, 10);
    for beta in [2.0, 4.0, 10.0] {
        let p = solve_q_star(
            beta,
            theta,
            &SpectralLaw::rademacher(),
            Quadrature::default(),
        )?;
        let se = tap_state_evolution(&p, t_max, amp_lab::hermite::DEFAULT_DEGREE)?;
        println!(
            "\nbeta={beta} theta={theta} N={n} seeds={seeds}  q*={:.5} sigma*^2={:.5}",
            p.q_star, p.sigma_star_sq
        );
        let mut reports = Vec::new();
        for ens in TapEnsemble::involutions() {
            let obs = (1..=seeds)
                .map(|s| {
                    let r = run_tap_with_params(&ens, &p, n, t_max, s, &TapOptions::default())?;
                    seed_observables(&r.trace, &se.sigma_sq, s)
                })
                .collect::<amp_lab::Result<Vec<_>>>()?;
            reports.push(ObservableReport::aggregate(
                &ens.label(),
                beta,
                theta,
                n,
                &se,
                &obs,
            )?);
        }
        println!(
            "  t        d_t   {}",
            reports
                .iter()
                .map(|r| format!("{:>17}", r.ensemble))
                .collect::<String>()
        );
        for t in 0..t_max {
            print!("  {:<2} {:.3e}", t + 1, reports[0].rows[t].d_pred);
            for r in &reports {
                let row = &r.rows[t];
                print!(
                    "   {:.3e} ({:+.3})",
                    row.succ_diff,
                    row.succ_diff / row.d_pred - 1.0
                );
            }
            println!();
        }
        for r in &reports {
            let last = r.rows.last().unwrap();
            println!(
                "  {:<18} max rel err t>=2: {:.4}  z^10 Hermite m1..m4: {:+.4} {:+.4} {:+.4} {:+.4}  KS: {:.4}",
                r.ensemble,
                r.max_relative_se_error(2..=t_max),
                last.hermite[0],
                last.hermite[1],
                last.hermite[2],
                last.hermite[3],
                last.ks
            );
        }
        println!(
            "  pairwise spread / d_t: {:.4}",
            succ_diff_spread(&reports, 2..=t_max)?
        );
    }
    Ok(())
}
