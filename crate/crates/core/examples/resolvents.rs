//! Centered resolvents of Wigner and Wishart couplings against the values
//! predicted by the limiting laws.
//!
//! `cargo run --release --example resolvents`

use amp_lab::ensembles::{
    build_wigner_coupling, build_wishart_coupling, centered_resolvent, EntryKind,
};
use amp_lab::linalg::hutchinson_trace_sq;
use amp_lab::rng::{stream, Domain};
use amp_lab::spectral::SpectralLaw;

fn main() -> amp_lab::Result<()> {
    let n = 1024;
    let j = build_wigner_coupling(n, 1, EntryKind::Rademacher)?;
    let law = SpectralLaw::semicircle();
    let lambda = 2.5;
    let m = centered_resolvent(&j, lambda, law.resolvent_variance(lambda)?)?;
    let est = hutchinson_trace_sq(
        |v, o| m.apply_into(v, o),
        n,
        64,
        &mut stream(1, Domain::Probes),
    )?;
    println!(
        "wigner N={n} lambda={lambda}: (1/N)Tr M^2 ~ {:.5} +- {:.5}   law: {:.5}",
        est.value,
        est.std_err,
        law.resolvent_variance(lambda)?
    );

    let j = build_wishart_coupling(n, 1.0, 1, EntryKind::Rademacher)?;
    let ev = j.eigenvalues().expect("dense coupling");
    let emp = SpectralLaw::empirical(ev.to_vec())?;
    let mp = SpectralLaw::marchenko_pastur(1.0)?;
    let lambda = 4.5;
    let m = centered_resolvent(&j, lambda, emp.resolvent_variance(lambda)?)?;
    let est = hutchinson_trace_sq(
        |v, o| m.apply_into(v, o),
        n,
        64,
        &mut stream(2, Domain::Probes),
    )?;
    println!(
        "wishart phi=1 lambda={lambda}: (1/N)Tr M^2 ~ {:.5} +- {:.5}   empirical law: {:.5}   MP law: {:.5}",
        est.value,
        est.std_err,
        emp.resolvent_variance(lambda)?,
        mp.resolvent_variance(lambda)?
    );
    Ok(())
}
