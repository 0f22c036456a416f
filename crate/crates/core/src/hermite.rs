//! Normalized Hermite polynomials and Gauss-Hermite quadrature for the
//! standard Gaussian measure.
//!
//! `H_k` here is the unit-norm probabilists' polynomial: `E[H_j(Z) H_k(Z)] =
//! δ_jk` for `Z ~ N(0, 1)`. It relates to the monic probabilists' polynomial by
//! `He_k = sqrt(k!) * H_k`, and is evaluated with the three-term recurrence
//!
//! ```text
//! H_{k+1}(x) = (x H_k(x) - sqrt(k) H_{k-1}(x)) / sqrt(k + 1)
//! ```
//!
//! which never forms `k!` and stays finite for every degree below
//! [`MAX_DEGREE`] on the quadrature nodes we use.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Highest Hermite degree accepted by [`hermite_eval`] and friends.
pub const MAX_DEGREE: usize = 256;

/// Largest Gauss-Hermite rule that [`gauss_hermite_rule`] builds.
pub const MAX_RULE_ORDER: usize = 256;

/// Truncation degree used for smooth nonlinearities when callers do not pick
/// one. The tanh-based TAP nonlinearity needs well over 96 terms before the
/// Parseval tail drops under 1e-8.
pub const DEFAULT_DEGREE: usize = 120;

/// Evaluates the normalized Hermite polynomial `H_k(x)`.
pub fn hermite_eval(k: usize, x: f64) -> Result<f64> {
    if k > MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree: k,
            cap: MAX_DEGREE,
        });
    }
    let mut prev = 1.0;
    if k == 0 {
        return Ok(prev);
    }
    let mut cur = x;
    for j in 1..k {
        let next = (x * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Fills `out[k] = H_k(x)` for `k = 0..out.len()`.
pub(crate) fn hermite_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = x;
    for j in 1..out.len() - 1 {
        out[j + 1] = (x * out[j] - (j as f64).sqrt() * out[j - 1]) / ((j + 1) as f64).sqrt();
    }
}

/// Nodes and weights of an `n`-point Gauss rule for `N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermiteRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `E[f(Z)]` under the rule.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn rule_cache() -> &'static Mutex<HashMap<usize, Arc<GaussHermiteRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermiteRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Returns the (cached) `n`-point Gauss-Hermite rule for the standard
/// Gaussian measure. Exact for polynomials up to degree `2n - 1`.
pub fn gauss_hermite_rule(n: usize) -> Result<Arc<GaussHermiteRule>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "a Gauss-Hermite rule needs at least one node".into(),
        ));
    }
    if n > MAX_RULE_ORDER {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Hermite order {n} exceeds the cap {MAX_RULE_ORDER}"
        )));
    }
    let mut cache = rule_cache().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(rule) = cache.get(&n) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(build_rule(n));
    cache.insert(n, Arc::clone(&rule));
    Ok(rule)
}

/// Golub-Welsch: the nodes are the eigenvalues of the Jacobi matrix of the
/// recurrence. Eigenvalues are then polished by Newton on `H_n` and the
/// weights taken from `w_i = 1 / (n H_{n-1}(x_i)^2)`, which is accurate in
/// relative terms even where the eigenvector route underflows.
fn build_rule(n: usize) -> GaussHermiteRule {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let mut h = vec![0.0; n + 1];
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            hermite_all(*x, &mut h);
            let deriv = (n as f64).sqrt() * h[n - 1];
            if deriv == 0.0 {
                break;
            }
            *x -= h[n] / deriv;
        }
    }
    for i in 0..n / 2 {
        let m = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -m;
        nodes[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            hermite_all(x, &mut h[..n]);
            1.0 / (n as f64 * h[n - 1] * h[n - 1])
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    GaussHermiteRule { nodes, weights }
}

/// Default quadrature order for a Hermite expansion truncated at `max_degree`.
pub fn default_order(max_degree: usize) -> usize {
    (2 * max_degree + 8).clamp(64, MAX_RULE_ORDER)
}

/// Coefficients of a function in the normalized Hermite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSeries {
    coefficients: Vec<f64>,
}

impl HermiteSeries {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidArgument(
                "a Hermite series needs at least the constant coefficient".into(),
            ));
        }
        if coefficients.len() > MAX_DEGREE + 1 {
            return Err(Error::DegreeOverflow {
                degree: coefficients.len() - 1,
                cap: MAX_DEGREE,
            });
        }
        Ok(Self { coefficients })
    }

    /// The series `H_k` itself.
    pub fn basis(k: usize) -> Result<Self> {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Self::new(c)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn max_degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// `Σ c_k²`, i.e. `E[f(Z)²]` for the represented polynomial.
    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut h = vec![0.0; self.coefficients.len()];
        hermite_all(x, &mut h);
        h.iter().zip(&self.coefficients).map(|(h, c)| h * c).sum()
    }
}

/// Expands `x -> f(sigma x)` in the normalized Hermite basis:
/// coefficient `k` is `E[H_k(Z) f(sigma Z)]`.
pub fn hermite_coefficients(
    f: impl Fn(f64) -> f64,
    max_degree: usize,
    sigma: f64,
) -> Result<HermiteSeries> {
    hermite_coefficients_with_order(f, max_degree, sigma, default_order(max_degree))
}

pub fn hermite_coefficients_with_order(
    f: impl Fn(f64) -> f64,
    max_degree: usize,
    sigma: f64,
    order: usize,
) -> Result<HermiteSeries> {
    if max_degree > MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree: max_degree,
            cap: MAX_DEGREE,
        });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "expansion scale must be positive and finite, got {sigma}"
        )));
    }
    if order < max_degree + 4 {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {order} too low for degree {max_degree}"
        )));
    }
    let rule = gauss_hermite_rule(order)?;
    let mut coefficients = vec![0.0; max_degree + 1];
    let mut h = vec![0.0; max_degree + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(sigma * x);
        if !fx.is_finite() {
            return Err(Error::Numeric(format!(
                "nonlinearity is not finite at quadrature node {x} (argument {})",
                sigma * x
            )));
        }
        hermite_all(x, &mut h);
        for (c, hk) in coefficients.iter_mut().zip(&h) {
            *c += w * fx * hk;
        }
    }
    HermiteSeries::new(coefficients)
}

/// `E[a(Z₁) b(Z₂)]` for standardized jointly Gaussian `(Z₁, Z₂)` with
/// correlation `rho`, via `E[H_j(Z₁) H_k(Z₂)] = δ_jk rho^k`.
pub fn bivariate_gaussian_moment(a: &HermiteSeries, b: &HermiteSeries, rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "correlation {rho} outside [-1, 1]"
        )));
    }
    let mut power = 1.0;
    let mut total = 0.0;
    for (ak, bk) in a.coefficients.iter().zip(&b.coefficients) {
        total += ak * bk * power;
        power *= rho;
    }
    Ok(total)
}

/// `E[f(σ Z)]` under an `order`-point rule.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64, sigma: f64, order: usize) -> Result<f64> {
    let rule = gauss_hermite_rule(order)?;
    Ok(rule.expect(|x| f(sigma * x)))
}

/// `E f(σZ)` by the trapezoid rule on `[-10, 10]` with step `h`.
///
/// For `f` bounded and analytic in a strip of half-width `d` the error
/// decays like `exp(-2πd/(σh))`, much faster than Gauss-Hermite for
/// functions such as `tanh` whose poles sit close to the real axis.
pub fn gaussian_expectation_trapezoid(f: impl Fn(f64) -> f64, sigma: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "trapezoid step must lie in (0, 1], got {h}"
        )));
    }
    let half = (10.0 / h).ceil() as i64;
    let mut acc = 0.0;
    for k in -half..=half {
        let x = k as f64 * h;
        acc += f(sigma * x) * (-0.5 * x * x).exp();
    }
    Ok(acc * h / (2.0 * std::f64::consts::PI).sqrt())
}

/// `E[f(X) g(rho X + sqrt(1 - rho²) Y)]` for independent standard `X, Y`,
/// by tensor-product quadrature.
pub fn bivariate_expectation(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    rho: f64,
    order: usize,
) -> Result<f64> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "correlation {rho} outside [-1, 1]"
        )));
    }
    let rule = gauss_hermite_rule(order)?;
    let c = (1.0 - rho * rho).max(0.0).sqrt();
    let mut total = 0.0;
    for (&x, &wx) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(x);
        let inner: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&y, &wy)| wy * g(rho * x + c * y))
            .sum();
        total += wx * fx * inner;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_values() {
        assert_eq!(hermite_eval(0, 7.3).unwrap(), 1.0);
        assert!(hermite_eval(2, 1.0).unwrap().abs() < 1e-15);
        assert_eq!(hermite_eval(3, 0.0).unwrap(), 0.0);
        let x = 0.7;
        let h2 = (x * x - 1.0) / 2f64.sqrt();
        assert!((hermite_eval(2, x).unwrap() - h2).abs() < 1e-15);
    }

    #[test]
    fn degree_cap_is_enforced() {
        assert!(matches!(
            hermite_eval(MAX_DEGREE + 1, 0.1),
            Err(Error::DegreeOverflow { .. })
        ));
        assert!(hermite_eval(MAX_DEGREE, 0.1).is_ok());
    }

    #[test]
    fn rule_basics() {
        let r1 = gauss_hermite_rule(1).unwrap();
        assert_eq!(r1.nodes, vec![0.0]);
        assert_eq!(r1.weights, vec![1.0]);
        assert!(gauss_hermite_rule(0).is_err());
        for n in [2, 5, 16, 64, 256] {
            let r = gauss_hermite_rule(n).unwrap();
            let sum: f64 = r.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            assert!((r.expect(|x| x * x) - 1.0).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn fourth_moment_matches_trapezoid_oracle() {
        // Trapezoid rule on the density over [-12, 12]; the integrand is
        // smooth and negligible at the ends, so this converges spectrally.
        let steps = 24_000;
        let h = 24.0 / steps as f64;
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let trap: f64 = (0..=steps)
            .map(|i| {
                let x = -12.0 + i as f64 * h;
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * x.powi(4) * (-0.5 * x * x).exp() / norm
            })
            .sum::<f64>()
            * h;
        assert!((trap - 3.0).abs() < 1e-12);
        let r = gauss_hermite_rule(8).unwrap();
        assert!((r.expect(|x| x.powi(4)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormality_up_to_degree_eight() {
        let r = gauss_hermite_rule(32).unwrap();
        for j in 0..=8 {
            for k in 0..=8 {
                let v = r.expect(|x| hermite_eval(j, x).unwrap() * hermite_eval(k, x).unwrap());
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-10, "({j},{k}) -> {v}");
            }
        }
    }

    #[test]
    fn identity_and_square_coefficients() {
        let c = hermite_coefficients(|x| x, 3, 1.0).unwrap();
        let want = [0.0, 1.0, 0.0, 0.0];
        for (a, b) in c.coefficients().iter().zip(want) {
            assert!((a - b).abs() < 1e-13);
        }
        // x² = H_0 + sqrt(2) H_2, so x²/sqrt(3) = (H_0 + sqrt(2) H_2)/sqrt(3).
        let s3 = 3f64.sqrt();
        let c = hermite_coefficients(|x| x * x / s3, 6, 1.0).unwrap();
        let want = [1.0 / s3, 0.0, 2f64.sqrt() / s3, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in c.coefficients().iter().zip(want) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn non_finite_values_are_reported() {
        let err = hermite_coefficients(|x| if x > 3.0 { f64::NAN } else { x }, 4, 1.0).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn bivariate_moment_edge_cases() {
        let a = HermiteSeries::new(vec![0.5, 0.2, 0.3]).unwrap();
        let b = HermiteSeries::new(vec![2.0, -1.0]).unwrap();
        assert_eq!(bivariate_gaussian_moment(&a, &b, 0.0).unwrap(), 1.0);
        let p = bivariate_gaussian_moment(&a, &a, 1.0).unwrap();
        assert!((p - a.norm_sq()).abs() < 1e-15);
        assert!(bivariate_gaussian_moment(&a, &b, 1.0 + 1e-9).is_err());
        let h2 = HermiteSeries::basis(2).unwrap();
        assert!((bivariate_gaussian_moment(&h2, &h2, 0.5).unwrap() - 0.25).abs() < 1e-15);
    }
}
