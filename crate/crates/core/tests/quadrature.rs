use amp_lab::hermite::{gaussian_expectation_trapezoid, hermite_coefficients, DEFAULT_DEGREE};
use amp_lab::rng::{gaussian_vec, stream, Domain};

#[test]
fn tanh_mean_coefficient_against_independent_oracles() {
    let f = |x: f64| (2.0 + x).tanh();
    let c0 = hermite_coefficients(f, DEFAULT_DEGREE, 1.0)
        .unwrap()
        .coefficients()[0];
    let trap = gaussian_expectation_trapezoid(f, 1.0, 0.01).unwrap();
    assert!((c0 - trap).abs() <= 1e-8, "{c0} vs {trap}");

    let n = 1_000_000;
    let z = gaussian_vec(n, 1.0, &mut stream(1, Domain::Custom(20)));
    let vals: Vec<f64> = z.iter().map(|&x| f(x)).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!(
        (mean - c0).abs() <= 5.0 * sd / (n as f64).sqrt(),
        "{mean} vs {c0}"
    );
}
