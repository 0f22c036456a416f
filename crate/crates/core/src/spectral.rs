//! Cauchy and R-transforms of the limiting spectral laws, on the real axis to
//! the right of the support.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LawKind {
    /// Uniform on {-1, +1}.
    Rademacher,
    /// Semicircle on [-2, 2].
    Semicircle,
    /// Spectrum of `XᵀX / sqrt(MN)` with `X` an `M × N` matrix of unit-variance
    /// entries and `M / N -> phi`.
    MarchenkoPastur { phi: f64 },
    /// Uniform atoms at the stored eigenvalues (sorted ascending).
    Empirical(Arc<[f64]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLaw {
    kind: LawKind,
    lambda_plus: f64,
}

impl SpectralLaw {
    pub fn rademacher() -> Self {
        Self {
            kind: LawKind::Rademacher,
            lambda_plus: 1.0,
        }
    }

    pub fn semicircle() -> Self {
        Self {
            kind: LawKind::Semicircle,
            lambda_plus: 2.0,
        }
    }

    pub fn marchenko_pastur(phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "aspect ratio phi must be positive, got {phi}"
            )));
        }
        let r = phi.sqrt();
        Ok(Self {
            kind: LawKind::MarchenkoPastur { phi },
            lambda_plus: r + 1.0 / r + 2.0,
        })
    }

    pub fn empirical(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument(
                "empirical law needs at least one eigenvalue".into(),
            ));
        }
        if let Some(bad) = eigenvalues.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite eigenvalue {bad}"
            )));
        }
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        let lambda_plus = *eigenvalues.last().unwrap();
        Ok(Self {
            kind: LawKind::Empirical(eigenvalues.into()),
            lambda_plus,
        })
    }

    /// Reads one eigenvalue per line. Blank lines and `#` comments are skipped.
    pub fn from_eigenvalue_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::empirical(parse_eigenvalues(&text, &path.display().to_string())?)
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    pub fn label(&self) -> String {
        match &self.kind {
            LawKind::Rademacher => "rademacher".into(),
            LawKind::Semicircle => "semicircle".into(),
            LawKind::MarchenkoPastur { phi } => format!("marchenko_pastur(phi={phi})"),
            LawKind::Empirical(ev) => format!("empirical(n={})", ev.len()),
        }
    }

    /// `lim G(z)` as `z` decreases to the edge; `None` when unbounded.
    pub fn edge_value(&self) -> Option<f64> {
        match &self.kind {
            LawKind::Rademacher | LawKind::Empirical(_) => None,
            LawKind::Semicircle => Some(1.0),
            LawKind::MarchenkoPastur { phi } => {
                let gamma = 1.0 / phi;
                let g = gamma.sqrt();
                Some(1.0 / (g * (1.0 + g)) / phi.sqrt())
            }
        }
    }

    fn check_z(&self, z: f64) -> Result<()> {
        if z > self.lambda_plus && z.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "Cauchy transform of {} needs z > {}, got {z}",
                self.label(),
                self.lambda_plus
            )))
        }
    }

    /// `G(z) = ∫ ξ(dλ) / (z - λ)`.
    pub fn cauchy_transform(&self, z: f64) -> Result<f64> {
        self.check_z(z)?;
        Ok(match &self.kind {
            LawKind::Rademacher => z / (z * z - 1.0),
            LawKind::Semicircle => semicircle_g(z),
            LawKind::MarchenkoPastur { phi } => {
                let r = phi.sqrt();
                mp_unit(z / r, 1.0 / phi).0 / r
            }
            LawKind::Empirical(ev) => {
                ev.iter().map(|&l| 1.0 / (z - l)).sum::<f64>() / ev.len() as f64
            }
        })
    }

    /// `G'(z) = -∫ ξ(dλ) / (z - λ)²`.
    pub fn cauchy_derivative(&self, z: f64) -> Result<f64> {
        self.check_z(z)?;
        Ok(match &self.kind {
            LawKind::Rademacher => {
                let d = z * z - 1.0;
                -(z * z + 1.0) / (d * d)
            }
            LawKind::Semicircle => {
                let s = (z * z - 4.0).sqrt();
                // 0.5 (1 - z/s), rewritten to avoid cancellation far from the edge
                -2.0 / (s * (z + s))
            }
            LawKind::MarchenkoPastur { phi } => mp_unit(z / phi.sqrt(), 1.0 / phi).1 / phi,
            LawKind::Empirical(ev) => {
                -ev.iter()
                    .map(|&l| {
                        let d = z - l;
                        1.0 / (d * d)
                    })
                    .sum::<f64>()
                    / ev.len() as f64
            }
        })
    }

    /// `-G'(z) - G(z)²`: the normalized trace of the squared centered
    /// resolvent at `z` under this law.
    pub fn resolvent_variance(&self, z: f64) -> Result<f64> {
        let g = self.cauchy_transform(z)?;
        Ok(-self.cauchy_derivative(z)? - g * g)
    }

    /// `G⁻¹(y)` on `(lambda_plus, ∞)`, by bisection and a Newton polish.
    pub fn inverse_cauchy(&self, y: f64) -> Result<f64> {
        let sup = self.edge_value();
        let ok = y > 0.0 && y.is_finite() && sup.is_none_or(|s| y < s);
        if !ok {
            let range = match sup {
                Some(s) => format!("(0, {s})"),
                None => "(0, inf)".to_string(),
            };
            return Err(Error::Domain(format!(
                "{y} is outside the range {range} of the Cauchy transform of {}",
                self.label()
            )));
        }
        let lp = self.lambda_plus;
        let mut lo = lp;
        let mut hi = lp + 1.0 / y + 1.0;
        while self.cauchy_transform(hi)? > y {
            lo = hi;
            hi = lp + 2.0 * (hi - lp);
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cauchy_transform(mid)? > y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        let mut z = 0.5 * (lo + hi);
        if z <= lp {
            z = hi;
        }
        for _ in 0..3 {
            let r = self.cauchy_transform(z)? - y;
            let step = r / self.cauchy_derivative(z)?;
            let next = z - step;
            if !(next > lp && next.is_finite()) || step == 0.0 {
                break;
            }
            let rn = self.cauchy_transform(next)? - y;
            if rn.abs() >= r.abs() {
                break;
            }
            z = next;
        }
        Ok(z)
    }

    /// `(R(y), R'(y))` with `R(y) = G⁻¹(y) - 1/y` and
    /// `R'(y) = 1/G'(G⁻¹(y)) + 1/y²`.
    pub fn r_transform(&self, y: f64) -> Result<(f64, f64)> {
        let z = self.inverse_cauchy(y)?;
        let gp = self.cauchy_derivative(z)?;
        Ok((z - 1.0 / y, 1.0 / gp + 1.0 / (y * y)))
    }
}

fn semicircle_g(z: f64) -> f64 {
    // (z - sqrt(z² - 4)) / 2 without cancellation
    2.0 / (z + (z * z - 4.0).sqrt())
}

/// Cauchy transform and derivative of the standard Marchenko-Pastur law with
/// ratio `gamma` (variance one, atom at zero when `gamma > 1`), for `z > b`.
fn mp_unit(z: f64, gamma: f64) -> (f64, f64) {
    let a = (1.0 - gamma.sqrt()).powi(2);
    let b = (1.0 + gamma.sqrt()).powi(2);
    let c = 1.0 - gamma;
    let s = ((z - a) * (z - b)).sqrt();
    let g = (z - c - s) / (2.0 * gamma * z);
    let ds = (2.0 * z - a - b) / (2.0 * s);
    let gp = (c + s - z * ds) / (2.0 * gamma * z * z);
    (g, gp)
}

pub(crate) fn parse_eigenvalues(text: &str, source_name: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::Parse {
            source_name: source_name.to_string(),
            line: i + 1,
            message: format!("not a decimal number: {t:?}"),
        })?;
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_forms() -> Vec<SpectralLaw> {
        vec![
            SpectralLaw::rademacher(),
            SpectralLaw::semicircle(),
            SpectralLaw::marchenko_pastur(1.0).unwrap(),
            SpectralLaw::marchenko_pastur(0.5).unwrap(),
            SpectralLaw::marchenko_pastur(3.0).unwrap(),
        ]
    }

    /// Periodic trapezoid on x = c + r cos t, which integrates a square-root
    /// edge density spectrally.
    fn edge_quadrature(c: f64, r: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        let n = 4000;
        let h = std::f64::consts::PI / n as f64;
        (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                f(c + r * t.cos(), t.sin())
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn rademacher_examples() {
        let law = SpectralLaw::rademacher();
        assert!((law.cauchy_transform(2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((law.cauchy_derivative(2.0).unwrap() + 5.0 / 9.0).abs() < 1e-15);
        assert!((law.inverse_cauchy(2.0 / 3.0).unwrap() - 2.0).abs() < 1e-12);
        let (r, _) = law.r_transform(2.0 / 3.0).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        // closed-form inverse
        for y in [0.05f64, 0.3, 1.0, 4.0] {
            let want = (1.0 + (1.0 + 4.0 * y * y).sqrt()) / (2.0 * y);
            assert!((law.inverse_cauchy(y).unwrap() - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn empirical_point_mass() {
        let law = SpectralLaw::empirical(vec![0.0]).unwrap();
        assert_eq!(law.cauchy_transform(1.0).unwrap(), 1.0);
        assert_eq!(law.cauchy_derivative(2.0).unwrap(), -0.25);
        assert!(SpectralLaw::empirical(vec![]).is_err());
        assert!(SpectralLaw::empirical(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn semicircle_against_density_quadrature() {
        let law = SpectralLaw::semicircle();
        for z in [2.1, 3.0, 7.0] {
            // density sqrt(4 - x²)/(2π), x = 2 cos t, dx = 2 sin t dt
            let q = edge_quadrature(0.0, 2.0, |x, s| {
                (2.0 * s) * (2.0 * s) / (2.0 * std::f64::consts::PI) / (z - x)
            });
            assert!(
                (law.cauchy_transform(z).unwrap() - q).abs() < 1e-10,
                "z={z}"
            );
        }
        let want = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((law.cauchy_transform(3.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn marchenko_pastur_against_density_quadrature() {
        for phi in [1.0, 2.0, 5.0] {
            let law = SpectralLaw::marchenko_pastur(phi).unwrap();
            let gamma = 1.0 / phi;
            let (a, b) = ((1.0 - gamma.sqrt()).powi(2), (1.0 + gamma.sqrt()).powi(2));
            let (c, r) = ((a + b) / 2.0, (b - a) / 2.0);
            let rp = phi.sqrt();
            for z in [law.lambda_plus() + 0.3, law.lambda_plus() + 4.0] {
                // W density sqrt((b-x)(x-a)) / (2π γ x); J = sqrt(phi) W
                let q = edge_quadrature(c, r, |x, s| {
                    let dens = (r * s) / (2.0 * std::f64::consts::PI * gamma * x);
                    dens * r * s / (z - rp * x)
                });
                assert!(
                    (law.cauchy_transform(z).unwrap() - q).abs() < 1e-9,
                    "phi={phi} z={z}"
                );
            }
        }
        let law = SpectralLaw::marchenko_pastur(1.0).unwrap();
        assert_eq!(law.lambda_plus(), 4.0);
        assert!((law.edge_value().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut laws = closed_forms();
        laws.push(SpectralLaw::empirical(vec![-1.3, 0.2, 0.5, 1.1]).unwrap());
        for law in laws {
            for dz in [0.5, 1.0, 5.0] {
                let z = law.lambda_plus() + dz;
                let h = 1e-6;
                let fd = (law.cauchy_transform(z + h).unwrap()
                    - law.cauchy_transform(z - h).unwrap())
                    / (2.0 * h);
                let d = law.cauchy_derivative(z).unwrap();
                assert!(d < 0.0);
                assert!((fd - d).abs() < 1e-7, "{} z={z}: {fd} vs {d}", law.label());
            }
        }
    }

    #[test]
    fn round_trips_and_r_prime() {
        for law in closed_forms() {
            for dz in [0.5, 1.0, 5.0] {
                let z = law.lambda_plus() + dz;
                let y = law.cauchy_transform(z).unwrap();
                let back = law.inverse_cauchy(y).unwrap();
                assert!((back - z).abs() < 1e-10, "{}: {back} vs {z}", law.label());
                assert!((law.cauchy_transform(back).unwrap() - y).abs() <= 1e-12);
            }
            for y in [0.1, 0.3] {
                let h = 1e-6;
                let (_, rp) = law.r_transform(y).unwrap();
                let fd = (law.r_transform(y + h).unwrap().0 - law.r_transform(y - h).unwrap().0)
                    / (2.0 * h);
                assert!(
                    (fd - rp).abs() < 1e-6,
                    "{} y={y}: {fd} vs {rp}",
                    law.label()
                );
            }
        }
        let sc = SpectralLaw::semicircle();
        let y = sc.cauchy_transform(2.5).unwrap();
        assert!((sc.inverse_cauchy(y).unwrap() - 2.5).abs() < 1e-10);
        for y in [1e-3, 0.01, 0.1, 0.5] {
            assert!((sc.r_transform(y).unwrap().0 - y).abs() < 1e-8);
        }
    }

    #[test]
    fn rademacher_r_prime_closed_form() {
        let law = SpectralLaw::rademacher();
        for y in [0.1f64, 0.5, 1.0, 3.0] {
            let s = (1.0 + 4.0 * y * y).sqrt();
            let want = (s - 1.0) / (2.0 * y * y * s);
            let (_, rp) = law.r_transform(y).unwrap();
            assert!((rp - want).abs() < 1e-10 * want.max(1.0));
        }
    }

    #[test]
    fn domain_errors() {
        let sc = SpectralLaw::semicircle();
        assert!(matches!(sc.cauchy_transform(2.0), Err(Error::Domain(_))));
        assert!(matches!(sc.inverse_cauchy(1.0), Err(Error::Domain(_))));
        assert!(matches!(sc.inverse_cauchy(-0.1), Err(Error::Domain(_))));
        assert!(SpectralLaw::rademacher().inverse_cauchy(1e6).is_ok());
        assert!(SpectralLaw::marchenko_pastur(0.0).is_err());
    }

    #[test]
    fn strictly_decreasing_on_grid() {
        let mut laws = closed_forms();
        laws.push(SpectralLaw::empirical(vec![0.0, 0.3, 2.0]).unwrap());
        for law in laws {
            let mut prev = f64::INFINITY;
            for i in 1..=50 {
                let z = law.lambda_plus() + 10.0 * i as f64 / 50.0;
                let g = law.cauchy_transform(z).unwrap();
                assert!(g < prev);
                prev = g;
            }
        }
    }

    #[test]
    fn semicircle_resolvent_variance_positive() {
        let sc = SpectralLaw::semicircle();
        for i in 1..200 {
            let z = 2.0 + i as f64 * 0.05;
            assert!(sc.resolvent_variance(z).unwrap() > 0.0);
        }
    }

    #[test]
    fn eigenvalue_file_parsing() {
        let v = parse_eigenvalues("# spectrum\n1.5\n\n-2e-1\n", "mem").unwrap();
        assert_eq!(v, vec![1.5, -0.2]);
        let err = parse_eigenvalues("1\nabc\n", "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
