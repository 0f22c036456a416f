//! Normalized Hermite polynomials, Gauss-Hermite rules and Hermite
//! expansions of a nonlinearity.
//!
//! `cargo run --release --example hermite_quadrature`

use amp_lab::hermite::{
    bivariate_gaussian_moment, gauss_hermite_rule, gaussian_expectation_trapezoid,
    hermite_coefficients, hermite_eval, DEFAULT_DEGREE,
};

fn main() -> amp_lab::Result<()> {
    println!("H_k(1.5) for k = 0..6:");
    for k in 0..=6 {
        println!("  H_{k}(1.5) = {:+.12}", hermite_eval(k, 1.5)?);
    }

    let rule = gauss_hermite_rule(64)?;
    println!(
        "\n64-point rule: E[Z^4] = {:.15}",
        rule.expect(|x| x.powi(4))
    );
    let mut worst = 0.0f64;
    for j in 0..=8 {
        for k in 0..=8 {
            let ip = rule.expect(|x| hermite_eval(j, x).unwrap() * hermite_eval(k, x).unwrap());
            worst = worst.max((ip - if j == k { 1.0 } else { 0.0 }).abs());
        }
    }
    println!("orthonormality defect up to degree 8: {worst:.2e}");

    let series = hermite_coefficients(|x| x.tanh(), DEFAULT_DEGREE, 1.0)?;
    println!("\ntanh at sigma = 1, degree {DEFAULT_DEGREE}:");
    for (k, c) in series.coefficients().iter().enumerate().take(8) {
        println!("  c_{k} = {c:+.3e}");
    }
    let direct = gaussian_expectation_trapezoid(|x| x.tanh().powi(2), 1.0, 0.05)?;
    println!(
        "  sum c_k^2 = {:.12}   E tanh^2(Z) = {direct:.12}",
        series.norm_sq()
    );
    for rho in [0.0, 0.5, 0.9] {
        println!(
            "  E[tanh(X) tanh(Y)], corr {rho}: {:.12}",
            bivariate_gaussian_moment(&series, &series, rho)?
        );
    }
    Ok(())
}
