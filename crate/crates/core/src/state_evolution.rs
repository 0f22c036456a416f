//! State evolution for memory-free AMP and divergence-free centering.
//!
//! For `z^{t+1} = M f̄_{t+1}(z^t)` the iterates behave like a centered
//! Gaussian process with
//!
//! ```text
//! σ²_{t+1}   = σψ² E[f̄_{t+1}(Z_t)²]
//! ρ_{s,t+1}  = σψ² E[f̄_s(Z_{s-1}) f̄_{t+1}(Z_t)],   s ≤ t,   ρ_{0,t} = 0 (t ≥ 1)
//! ```
//!
//! Each `f̄_t` is expanded in Hermite polynomials of the *standardized* input
//! `Z_{t-1} / σ_{t-1}`; the cross moment is then `Σ_k a_k b_k r^k` with
//! `r = ρ_{s-1,t} / (σ_{s-1} σ_t)`. The diagonal terms use direct
//! quadrature, which does not suffer from truncating the expansion.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hermite::{
    bivariate_expectation, bivariate_gaussian_moment, default_order, gauss_hermite_rule,
    hermite_coefficients_with_order, HermiteSeries, DEFAULT_DEGREE,
};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar function applied entrywise.
#[derive(Clone)]
pub struct Nonlinearity {
    f: ScalarFn,
    derivative: Option<ScalarFn>,
    label: String,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("label", &self.label)
            .finish()
    }
}

impl Nonlinearity {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            derivative: None,
            label: label.into(),
        }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(x))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0).with_derivative(|_| 0.0)
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| x).with_derivative(|_| 1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| c).with_derivative(|_| 0.0)
    }

    /// `x² / sqrt(3)`: unit second moment under `N(0, 1)`.
    pub fn square() -> Self {
        let s = 1.0 / 3f64.sqrt();
        Self::new("square", move |x| s * x * x).with_derivative(move |x| 2.0 * s * x)
    }

    /// `tanh`; centered by the engine at its input scale.
    pub fn tanh() -> Self {
        Self::new("tanh", f64::tanh).with_derivative(|x| 1.0 - x.tanh().powi(2))
    }

    /// `x³ / sqrt(6)`; once centered at unit scale it is exactly `H_3`.
    pub fn cubic() -> Self {
        let s = 1.0 / 6f64.sqrt();
        Self::new("cubic", move |x| s * x * x * x).with_derivative(move |x| 3.0 * s * x * x)
    }

    /// Named presets: `square`, `tanh-centered`, `cubic-centered`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "square" => Ok(Self::square()),
            "tanh-centered" | "tanh" => Ok(Self::tanh()),
            "cubic-centered" | "cubic" => Ok(Self::cubic()),
            "zero" => Ok(Self::zero()),
            _ => Err(Error::InvalidArgument(format!(
                "unknown nonlinearity preset {name:?}"
            ))),
        }
    }
}

/// `E[Z f(σZ)] / σ`, the slope removed by centering.
pub fn centering_coefficient(f: &Nonlinearity, sigma: f64, order: usize) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "centering scale must be positive, got {sigma}"
        )));
    }
    let rule = gauss_hermite_rule(order)?;
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let y = f.eval(sigma * x);
        if !y.is_finite() {
            return Err(Error::Numeric(format!(
                "{} is not finite at {}",
                f.label(),
                sigma * x
            )));
        }
        acc += w * x * y;
    }
    Ok(acc / sigma)
}

/// `f̄(x) = f(x) - (E[Z f(σZ)] / σ) x`.
pub fn center_divergence_free(f: &Nonlinearity, sigma: f64) -> Result<Nonlinearity> {
    center_with_order(f, sigma, default_order(DEFAULT_DEGREE))
}

fn center_with_order(f: &Nonlinearity, sigma: f64, order: usize) -> Result<Nonlinearity> {
    let c = centering_coefficient(f, sigma, order)?;
    if c == 0.0 {
        return Ok(f.clone());
    }
    let inner = Arc::clone(&f.f);
    let mut out = Nonlinearity::new(format!("centered({})", f.label), move |x| inner(x) - c * x);
    if let Some(d) = &f.derivative {
        let d = Arc::clone(d);
        out = out.with_derivative(move |x| d(x) - c);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct SeOptions {
    /// Hermite truncation degree for the cross moments.
    pub degree: usize,
    /// Gauss-Hermite order; `None` picks [`default_order`] of the degree.
    pub quad_order: Option<usize>,
    /// Recompute every cross moment by 2-D quadrature and record the largest
    /// discrepancy.
    pub cross_check: bool,
}

impl Default for SeOptions {
    fn default() -> Self {
        Self {
            degree: DEFAULT_DEGREE,
            quad_order: None,
            cross_check: false,
        }
    }
}

/// Output of the recursion: `σ_t²` for `t = 0..=T` and `ρ_{s,t}`.
#[derive(Debug, Clone)]
pub struct SeCovariance {
    pub t_max: usize,
    pub sigma_sq: Vec<f64>,
    /// `rho[t][s] = ρ_{s,t}` for `s ≤ t`; `rho[t][t] = σ_t²`.
    rho: Vec<Vec<f64>>,
    pub sigma_psi_sq: f64,
    /// The centered nonlinearities `f̄_1..f̄_T`, as they must be run.
    pub centered: Vec<Nonlinearity>,
    /// First `t` at which `σ_t²` vanished, if any.
    pub degenerate_at: Option<usize>,
    /// Largest gap between the Hermite and quadrature cross moments.
    pub cross_check_max_dev: Option<f64>,
}

impl SeCovariance {
    pub fn rho(&self, s: usize, t: usize) -> f64 {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        self.rho[t][s]
    }

    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma_sq[t].sqrt()
    }

    /// `E[(Z_t - Z_{t-1})²]` for `t = 1..=T` (index 0 is unused and zero).
    pub fn successive_diff(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.t_max + 1];
        for t in 1..=self.t_max {
            d[t] = self.sigma_sq[t] + self.sigma_sq[t - 1] - 2.0 * self.rho(t - 1, t);
        }
        d
    }

    /// `Σ_T` over `Z_0..Z_T`.
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.t_max + 1;
        DMatrix::from_fn(n, n, |i, j| self.rho(i, j))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance_matrix().symmetric_eigenvalues().min()
    }
}

/// Runs the recursion for `T` steps. `nonlins` has length `T`, or length
/// one to use the same function at every step.
pub fn run_state_evolution(
    nonlins: &[Nonlinearity],
    sigma0_sq: f64,
    sigma_psi_sq: f64,
    t_max: usize,
    degree: usize,
) -> Result<SeCovariance> {
    run_state_evolution_with(
        nonlins,
        sigma0_sq,
        sigma_psi_sq,
        t_max,
        SeOptions {
            degree,
            ..SeOptions::default()
        },
    )
}

pub fn run_state_evolution_with(
    nonlins: &[Nonlinearity],
    sigma0_sq: f64,
    sigma_psi_sq: f64,
    t_max: usize,
    opts: SeOptions,
) -> Result<SeCovariance> {
    if opts.degree < 4 {
        return Err(Error::InvalidArgument(format!(
            "state evolution needs degree >= 4, got {}",
            opts.degree
        )));
    }
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma0^2 must be positive, got {sigma0_sq}"
        )));
    }
    if !(sigma_psi_sq >= 0.0 && sigma_psi_sq.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma_psi^2 must be nonnegative, got {sigma_psi_sq}"
        )));
    }
    if !(nonlins.len() == t_max || (nonlins.len() == 1 && t_max > 0) || t_max == 0) {
        return Err(Error::InvalidArgument(format!(
            "{} nonlinearities supplied for T = {t_max}",
            nonlins.len()
        )));
    }
    let order = opts
        .quad_order
        .unwrap_or_else(|| default_order(opts.degree));
    let rule = gauss_hermite_rule(order)?;
    let tiny = 1e-20 * sigma0_sq.max(1.0);

    let mut sigma_sq = vec![sigma0_sq];
    let mut rho: Vec<Vec<f64>> = vec![vec![sigma0_sq]];
    let mut coeffs: Vec<HermiteSeries> = Vec::with_capacity(t_max);
    let mut centered = Vec::with_capacity(t_max);
    let mut degenerate_at = None;
    let mut max_dev: Option<f64> = None;

    for t in 0..t_max {
        let f = if nonlins.len() == 1 {
            &nonlins[0]
        } else {
            &nonlins[t]
        };
        let s_t = sigma_sq[t].sqrt();
        let degenerate = sigma_sq[t] <= tiny;
        if degenerate && degenerate_at.is_none() {
            degenerate_at = Some(t);
        }
        // f̄_{t+1} and its expansion in Z_t / σ_t
        let (fbar, series) = if degenerate {
            let c = f.eval(0.0);
            (Nonlinearity::constant(c), HermiteSeries::new(vec![c])?)
        } else {
            let fbar = center_with_order(f, s_t, order)?;
            let series =
                hermite_coefficients_with_order(|x| fbar.eval(x), opts.degree, s_t, order)?;
            (fbar, series)
        };
        let diag = if degenerate {
            series.coefficients()[0].powi(2)
        } else {
            rule.expect(|x| fbar.eval(s_t * x).powi(2))
        };
        let mut row = vec![0.0; t + 2];
        // s = 1..=t: ρ_{s,t+1} from ρ_{s-1,t}
        for s in 1..=t {
            let prev = if s == 1 { 0.0 } else { rho[t][s - 1] };
            let denom = (sigma_sq[s - 1] * sigma_sq[t]).sqrt();
            let r = if denom > 0.0 { prev / denom } else { 0.0 };
            if r.abs() > 1.0 + 1e-8 {
                return Err(Error::Numeric(format!(
                    "normalized correlation {r} between steps {} and {t} exceeds one",
                    s - 1
                )));
            }
            let r = r.clamp(-1.0, 1.0);
            let m = bivariate_gaussian_moment(&coeffs[s - 1], &series, r)?;
            row[s] = sigma_psi_sq * m;
            if opts.cross_check && denom > 0.0 {
                let (fs, ss) = (&centered[s - 1] as &Nonlinearity, sigma_sq[s - 1].sqrt());
                let q = bivariate_expectation(
                    |x| fs.eval(ss * x),
                    |y| fbar.eval(s_t * y),
                    r,
                    order.min(96),
                )?;
                let dev = (sigma_psi_sq * q - row[s]).abs();
                max_dev = Some(max_dev.map_or(dev, |d: f64| d.max(dev)));
            }
        }
        row[t + 1] = sigma_psi_sq * diag;
        if let Some(s) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "state evolution overflowed: rho_{{{s},{}}} is not finite",
                t + 1
            )));
        }
        sigma_sq.push(row[t + 1]);
        rho.push(row);
        coeffs.push(series);
        centered.push(fbar);
    }
    if degenerate_at.is_none() {
        if let Some(t) = sigma_sq.iter().position(|&s| s <= tiny) {
            degenerate_at = Some(t);
        }
    }
    Ok(SeCovariance {
        t_max,
        sigma_sq,
        rho,
        sigma_psi_sq,
        centered,
        degenerate_at,
        cross_check_max_dev: max_dev,
    })
}
