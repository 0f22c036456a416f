//! Semi-random diagnostics for the structured ensembles: delocalization,
//! operator norm and row Gram deviations.
//!
//! `cargo run --release --example ensemble_diagnostics`

use amp_lab::ensembles::{
    build_random_orthogonal, build_sign_perm, build_signed_hadamard, build_signed_sine,
    check_semi_random, DiagnosticMode, MatrixOperator,
};

fn main() -> amp_lab::Result<()> {
    let n = 1024;
    let spectrum: Vec<f64> = (0..n)
        .map(|i| if i % 4 == 0 { 1.5 } else { -0.5 })
        .collect();
    let ops: Vec<MatrixOperator> = vec![
        build_signed_sine(n, 1)?,
        build_signed_hadamard(n, 1)?,
        build_random_orthogonal(n, 1)?,
        build_sign_perm(&spectrum, 1)?,
        MatrixOperator::identity(n)?,
    ];
    println!("N = {n}; ratios are magnitudes times sqrt(N)");
    for op in &ops {
        let d = check_semi_random(op, DiagnosticMode::Dense)?;
        println!(
            "{:<18} |Psi|_inf*sqrtN = {:>8.4}  ||Psi||_op = {:.6}  offdiag*sqrtN = {:.3e}  diagdev*sqrtN = {:.3e}",
            op.label(),
            d.inf_norm_ratio(),
            d.psi_op_norm,
            d.offdiag_ratio(),
            d.diag_dev_ratio()
        );
    }
    let big = build_signed_hadamard(1 << 16, 3)?;
    let d = check_semi_random(&big, DiagnosticMode::Probe)?;
    println!("\nprobe mode, signed Hadamard N = 65536:\n{d}");
    Ok(())
}
