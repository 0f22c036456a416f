//! Cauchy and R-transforms of the limiting spectral laws used by the Ising
//! models, and their inverse.
//!
//! `cargo run --release --example spectral_transforms`

use amp_lab::spectral::SpectralLaw;

fn main() -> amp_lab::Result<()> {
    let laws = [
        SpectralLaw::rademacher(),
        SpectralLaw::semicircle(),
        SpectralLaw::marchenko_pastur(1.0)?,
        SpectralLaw::marchenko_pastur(2.0)?,
        SpectralLaw::empirical(vec![-1.0, -0.5, 0.5, 2.0])?,
    ];
    for law in &laws {
        println!(
            "{}  lambda_+ = {:.6}  G(lambda_+) = {:?}",
            law.label(),
            law.lambda_plus(),
            law.edge_value()
        );
        let z = law.lambda_plus() + 0.5;
        let g = law.cauchy_transform(z)?;
        println!(
            "  z = {z:.4}: G = {g:.10}  G' = {:.10}  -G'-G^2 = {:.10}",
            law.cauchy_derivative(z)?,
            law.resolvent_variance(z)?
        );
        println!("  G^-1(G(z)) = {:.12}", law.inverse_cauchy(g)?);
        for y in [0.1, 0.3] {
            match law.r_transform(y) {
                Ok((r, rp)) => println!("  R({y}) = {r:.10}  R'({y}) = {rp:.10}"),
                Err(e) => println!("  R({y}): {e}"),
            }
        }
    }
    // closed forms: semicircle R(y) = y, Rademacher R(y) = (sqrt(1+4y^2)-1)/(2y)
    let (r, _) = SpectralLaw::semicircle().r_transform(0.3)?;
    println!("\nsemicircle R(0.3) - 0.3 = {:.2e}", r - 0.3);
    let (r, _) = SpectralLaw::rademacher().r_transform(0.3)?;
    let want = ((1.0f64 + 4.0 * 0.09).sqrt() - 1.0) / 0.6;
    println!("rademacher R(0.3) error = {:.2e}", r - want);
    Ok(())
}
