//! TAP iteration for mean-field Ising models.
//!
//! Given `(β, θ)` and the limiting spectral law of the coupling `J`, the
//! fixed point
//!
//! ```text
//! q = E tanh²(θ + σ★(q) G),   σ★²(q) = β² q R'(β - βq)
//! ```
//! fixes `λ★ = G⁻¹(β - βq★)` and the iteration `z^{t+1} = M(λ★) g(z^t)` with
//! `g(z) = (tanh(θ + z)/(1 - q★) - z) / (β - βq★)` and `M(λ)` the centered
//! resolvent of `J`. Its state evolution keeps `σ_t² = σ★²` for every `t`.

use std::str::FromStr;
use std::sync::Arc;

use crate::amp::{run_amp, AmpMode, AmpTrace};
use crate::ensembles::{
    build_random_orthogonal, build_sign_perm, build_signed_hadamard, build_signed_sine,
    build_wigner_coupling, build_wishart_coupling, centered_resolvent, involution_resolvent,
    spectral_resolvent, EntryKind, MatrixOperator, DENSE_CAP,
};
use crate::error::{Error, Result};
use crate::hermite::{gaussian_expectation, gaussian_expectation_trapezoid};
use crate::rng::{self, Domain};
use crate::spectral::SpectralLaw;
use crate::state_evolution::{run_state_evolution, Nonlinearity, SeCovariance};

/// Dimension of the independent realization behind the Hopfield law.
pub const HOPFIELD_LAW_DIM: usize = 4096;
const HOPFIELD_LAW_SEED: u64 = 0x0005_eed0_f1a3;

#[derive(Debug, Clone, PartialEq)]
pub enum TapEnsemble {
    SignedSine,
    SignedHadamard,
    RandomOrthogonal,
    /// Wigner coupling, semicircle law.
    Sk,
    /// Sample-covariance coupling with aspect ratio `phi`.
    Hopfield {
        phi: f64,
    },
    /// Hadamard basis with a prescribed spectrum.
    SignPerm {
        spectrum: Arc<[f64]>,
    },
}

impl TapEnsemble {
    pub fn label(&self) -> String {
        match self {
            Self::SignedSine => "signed-sine".into(),
            Self::SignedHadamard => "signed-hadamard".into(),
            Self::RandomOrthogonal => "random-orthogonal".into(),
            Self::Sk => "sk".into(),
            Self::Hopfield { phi } => format!("hopfield:phi={phi}"),
            Self::SignPerm { spectrum } => format!("sign-perm(n={})", spectrum.len()),
        }
    }

    pub fn is_involution(&self) -> bool {
        matches!(
            self,
            Self::SignedSine | Self::SignedHadamard | Self::RandomOrthogonal
        )
    }

    /// The three involution ensembles compared in the universality runs.
    pub fn involutions() -> [TapEnsemble; 3] {
        [
            Self::SignedSine,
            Self::SignedHadamard,
            Self::RandomOrthogonal,
        ]
    }
}

impl FromStr for TapEnsemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (head, args) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "signed-sine" => Ok(Self::SignedSine),
            "signed-hadamard" => Ok(Self::SignedHadamard),
            "random-orthogonal" => Ok(Self::RandomOrthogonal),
            "sk" | "wigner" => Ok(Self::Sk),
            "hopfield" | "wishart" => {
                let mut phi = 1.0;
                for kv in args.split(',').filter(|x| !x.is_empty()) {
                    match kv.split_once('=') {
                        Some(("phi", v)) => {
                            phi = v.parse().map_err(|_| {
                                Error::InvalidArgument(format!("bad phi value {v:?}"))
                            })?
                        }
                        _ => return Err(Error::InvalidArgument(format!("unknown option {kv:?}"))),
                    }
                }
                Ok(Self::Hopfield { phi })
            }
            _ => Err(Error::InvalidArgument(format!(
                "unknown TAP ensemble {s:?}"
            ))),
        }
    }
}

/// `(β, θ, q★, σ★², λ★, σψ²)` bound to a spectral law.
#[derive(Debug, Clone)]
pub struct TapParameters {
    pub beta: f64,
    pub theta: f64,
    pub q_star: f64,
    pub sigma_star_sq: f64,
    pub lambda_star: f64,
    pub sigma_psi_sq: f64,
    /// `R(β - βq★)`.
    pub r_value: f64,
    pub law: SpectralLaw,
    /// Fixed-point iterations used (0 when `q★ = 0` was returned directly).
    pub iterations: usize,
}

impl TapParameters {
    /// `# beta=… theta=… q_star=… lambda_star=… sigma_psi_sq=… seed=…`.
    pub fn header_line(&self, seed: Option<&str>) -> String {
        let mut s = format!(
            "# beta={:.16e} theta={:.16e} q_star={:.16e} lambda_star={:.16e} sigma_psi_sq={:.16e}",
            self.beta, self.theta, self.q_star, self.lambda_star, self.sigma_psi_sq
        );
        if let Some(seed) = seed {
            s.push_str(&format!(" seed={seed}"));
        }
        s
    }
}

fn sigma_star_sq(beta: f64, q: f64, law: &SpectralLaw) -> Result<f64> {
    if q == 0.0 {
        return Ok(0.0);
    }
    let (_, rp) = law.r_transform(beta * (1.0 - q))?;
    Ok(beta * beta * q * rp)
}

/// Rule for the Gaussian averages inside the fixed-point equation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Quadrature {
    /// Trapezoid rule with a step adapted to `σ` (default).
    #[default]
    Trapezoid,
    /// Trapezoid rule with the step halved, as an independent check.
    FineTrapezoid,
    GaussHermite(usize),
}

impl Quadrature {
    /// `E tanh²(θ + σ G)`.
    pub fn tanh_sq_mean(self, theta: f64, s2: f64) -> Result<f64> {
        let s = s2.max(0.0).sqrt();
        let f = |x: f64| (theta + x).tanh().powi(2);
        match self {
            Self::Trapezoid => gaussian_expectation_trapezoid(f, s, tanh_step(s)),
            Self::FineTrapezoid => gaussian_expectation_trapezoid(f, s, 0.5 * tanh_step(s)),
            Self::GaussHermite(n) => gaussian_expectation(f, s, n),
        }
    }
}

/// Step giving `exp(-π²/(σh))` below double precision; the poles of
/// `tanh(θ + σx)` sit at imaginary distance `π/(2σ)`.
pub(crate) fn tanh_step(sigma: f64) -> f64 {
    (0.2 / sigma.max(1e-3)).min(0.1)
}

/// `|q - E tanh²(θ + σ★(q) G)|` under `quad`.
pub fn q_star_residual(params: &TapParameters, quad: Quadrature) -> Result<f64> {
    let s2 = sigma_star_sq(params.beta, params.q_star, &params.law)?;
    Ok((params.q_star - quad.tanh_sq_mean(params.theta, s2)?).abs())
}

/// Damped fixed-point iteration for `q★`, then `σ★²`, `λ★` and `σψ²`.
pub fn solve_q_star(
    beta: f64,
    theta: f64,
    law: &SpectralLaw,
    quad: Quadrature,
) -> Result<TapParameters> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "field strength must be >= 0, got {theta}"
        )));
    }
    // q must keep β(1 - q) inside the range of G
    let q_min = match law.edge_value() {
        Some(e) => (1.0 - e / beta).max(0.0),
        None => 0.0,
    };
    let feasible = |q: f64| (0.0..1.0).contains(&q) && (q > q_min || q_min == 0.0);

    let (q, iterations) = if theta == 0.0 && q_min == 0.0 {
        (0.0, 0)
    } else {
        let mut q = if theta > 0.0 { 0.5 } else { 0.01 };
        if !feasible(q) || q <= q_min {
            q = q_min + 0.5 * (1.0 - q_min);
        }
        let mut eta = 0.5;
        let mut prev_step = 0.0f64;
        let mut done = None;
        for it in 1..=10_000 {
            let target = quad.tanh_sq_mean(theta, sigma_star_sq(beta, q, law)?)?;
            let gap = target - q;
            if gap.abs() <= 1e-12 {
                done = Some(it);
                break;
            }
            let mut step = eta * gap;
            if step * prev_step < 0.0 && step.abs() >= 0.9 * prev_step.abs() {
                eta *= 0.5;
                step *= 0.5;
            }
            let mut next = q + step;
            let mut tries = 0;
            while !feasible(next) || (q_min > 0.0 && next <= q_min) {
                step *= 0.5;
                next = q + step;
                tries += 1;
                if tries > 60 {
                    return Err(Error::Domain(format!(
                        "fixed-point iteration for q left the R-transform domain q > {q_min} at q = {q}"
                    )));
                }
            }
            prev_step = step;
            q = next;
        }
        match done {
            Some(it) => (q, it),
            None => {
                let target = quad.tanh_sq_mean(theta, sigma_star_sq(beta, q, law)?)?;
                return Err(Error::Convergence {
                    context: format!("q-star fixed point at beta={beta}, theta={theta}"),
                    iterations: 10_000,
                    residual: (target - q).abs(),
                });
            }
        }
    };

    let s2 = sigma_star_sq(beta, q, law)?;
    let y = beta * (1.0 - q);
    let lambda_star = law.inverse_cauchy(y)?;
    let sigma_psi_sq = if q > 0.0 {
        let w = (1.0 - q).powi(2);
        let den = q - w * s2;
        if !(den > 0.0) {
            return Err(Error::Domain(format!(
                "sigma_psi^2 denominator q - (1-q)^2 sigma^2 = {den} is not positive"
            )));
        }
        beta * beta * w * w * s2 / den
    } else {
        let (_, rp) = law.r_transform(y)?;
        let den = 1.0 - y * y * rp;
        if !(den > 0.0) {
            return Err(Error::Domain(format!(
                "sigma_psi^2 denominator {den} is not positive"
            )));
        }
        y.powi(4) * rp / den
    };
    Ok(TapParameters {
        beta,
        theta,
        q_star: q,
        sigma_star_sq: s2,
        lambda_star,
        sigma_psi_sq,
        r_value: lambda_star - 1.0 / y,
        law: law.clone(),
        iterations,
    })
}

#[inline]
fn g_value(field: f64, x: f64, one_minus_q: f64, denom: f64) -> f64 {
    ((field + x).tanh() / one_minus_q - x) / denom
}

/// `g(z) = (tanh(θ + z)/(1 - q★) - z) / (β - βq★)`.
pub fn g_nonlinearity(params: &TapParameters) -> Result<Nonlinearity> {
    let omq = 1.0 - params.q_star;
    let denom = params.beta - params.beta * params.q_star;
    if !(denom > 0.0) || !(omq > 0.0) {
        return Err(Error::Domain(format!(
            "g needs beta(1 - q) > 0, got {denom}"
        )));
    }
    let theta = params.theta;
    Ok(
        Nonlinearity::new("tap-g", move |x| g_value(theta, x, omq, denom))
            .with_derivative(move |x| ((1.0 - (theta + x).tanh().powi(2)) / omq - 1.0) / denom),
    )
}

/// State evolution with the TAP choices: `σ0² = σ★²`, `f_t = g`, `σψ²` from
/// the parameters.
pub fn tap_state_evolution(
    params: &TapParameters,
    t_max: usize,
    degree: usize,
) -> Result<SeCovariance> {
    let g = g_nonlinearity(params)?;
    run_state_evolution(
        &[g],
        params.sigma_star_sq,
        params.sigma_psi_sq,
        t_max,
        degree,
    )
}

#[derive(Debug, Clone)]
pub struct TapOptions {
    /// Dimension of the independent sample that defines the Hopfield law.
    pub hopfield_law_dim: usize,
    pub entry_kind: EntryKind,
}

impl Default for TapOptions {
    fn default() -> Self {
        Self {
            hopfield_law_dim: HOPFIELD_LAW_DIM,
            entry_kind: EntryKind::Rademacher,
        }
    }
}

/// Limiting spectral law of an ensemble.
pub fn limiting_law(ensemble: &TapEnsemble, opts: &TapOptions) -> Result<SpectralLaw> {
    match ensemble {
        TapEnsemble::SignedSine | TapEnsemble::SignedHadamard | TapEnsemble::RandomOrthogonal => {
            Ok(SpectralLaw::rademacher())
        }
        TapEnsemble::Sk => Ok(SpectralLaw::semicircle()),
        TapEnsemble::Hopfield { phi } => {
            let n = opts.hopfield_law_dim.min(DENSE_CAP);
            let j = build_wishart_coupling(n, *phi, HOPFIELD_LAW_SEED, opts.entry_kind)?;
            let ev = j.eigenvalues().expect("dense coupling has a spectrum");
            SpectralLaw::empirical(ev.to_vec())
        }
        TapEnsemble::SignPerm { spectrum } => SpectralLaw::empirical(spectrum.to_vec()),
    }
}

/// The coupling `J` of one realization.
pub fn build_coupling(
    ensemble: &TapEnsemble,
    n: usize,
    seed: u64,
    opts: &TapOptions,
) -> Result<MatrixOperator> {
    match ensemble {
        TapEnsemble::SignedSine => build_signed_sine(n, seed),
        TapEnsemble::SignedHadamard => build_signed_hadamard(n, seed),
        TapEnsemble::RandomOrthogonal => build_random_orthogonal(n, seed),
        TapEnsemble::Sk => build_wigner_coupling(n, seed, opts.entry_kind),
        TapEnsemble::Hopfield { phi } => build_wishart_coupling(n, *phi, seed, opts.entry_kind),
        TapEnsemble::SignPerm { spectrum } => {
            if spectrum.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "sign-perm spectrum has {} values for N = {n}",
                    spectrum.len()
                )));
            }
            build_sign_perm(spectrum, seed)
        }
    }
}

/// Centered resolvent at `λ`, by the cheapest exact route available:
/// linear polynomial for involutions, the factored eigenbasis when there is
/// one, conjugate gradient otherwise. The operator carries `sigma_psi_sq`.
pub fn tap_resolvent(j: &MatrixOperator, lambda: f64, sigma_psi_sq: f64) -> Result<MatrixOperator> {
    if j.is_involution() {
        return Ok(involution_resolvent(j, lambda)?.with_sigma_psi_sq(sigma_psi_sq));
    }
    if j.known_spectrum().is_some() {
        if let Ok(m) = spectral_resolvent(j, lambda) {
            return Ok(m.with_sigma_psi_sq(sigma_psi_sq));
        }
    }
    centered_resolvent(j, lambda, sigma_psi_sq)
}

#[derive(Debug, Clone)]
pub struct TapRunResult {
    pub params: TapParameters,
    pub trace: AmpTrace,
    /// `m^t = tanh(θ h + z^t)`.
    pub magnetization: Vec<Vec<f64>>,
    /// `(1/N) ‖m^t - tanh(θ h + βJm^t - βR m^t)‖²`.
    pub tap_residual: Vec<f64>,
}

/// Runs the iteration with external field `θ h` (`h = None` means all ones)
/// from `z0`. `j` is the coupling, `m_op` its centered resolvent at `λ★`.
pub fn run_tap_iteration(
    params: &TapParameters,
    j: &MatrixOperator,
    m_op: &MatrixOperator,
    h: Option<&[f64]>,
    z0: Vec<f64>,
    t_max: usize,
) -> Result<TapRunResult> {
    let n = m_op.dim();
    if let Some(h) = h {
        if h.len() != n || h.iter().any(|&x| x != 1.0 && x != -1.0) {
            return Err(Error::InvalidArgument(
                "field signs must be a ±1 vector of length N".into(),
            ));
        }
    }
    let omq = 1.0 - params.q_star;
    let denom = params.beta - params.beta * params.q_star;
    let trace = match h {
        None => run_amp(m_op, &[g_nonlinearity(params)?], z0, t_max, AmpMode::Simple)?,
        Some(h) => {
            if z0.len() != n {
                return Err(Error::InvalidArgument(
                    "initial vector has the wrong length".into(),
                ));
            }
            let fields: Vec<f64> = h.iter().map(|&s| params.theta * s).collect();
            let mut iterates = vec![z0];
            let mut gz = vec![0.0; n];
            for t in 0..t_max {
                for ((o, &x), &f) in gz.iter_mut().zip(&iterates[t]).zip(&fields) {
                    *o = g_value(f, x, omq, denom);
                }
                iterates.push(m_op.apply(&gz)?);
            }
            AmpTrace {
                n,
                t_max,
                iterates,
                mode: AmpMode::Simple,
                seed: None,
                ensemble_label: m_op.label().to_string(),
                alphas: Vec::new(),
            }
        }
    };
    let field = |i: usize| params.theta * h.map_or(1.0, |h| h[i]);
    let mut magnetization = Vec::with_capacity(t_max + 1);
    let mut tap_residual = Vec::with_capacity(t_max + 1);
    for z in &trace.iterates {
        let m: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(i, &x)| (field(i) + x).tanh())
            .collect();
        let jm = j.apply(&m)?;
        let res = m
            .iter()
            .zip(&jm)
            .enumerate()
            .map(|(i, (&mi, &jmi))| {
                let r =
                    mi - (field(i) + params.beta * jmi - params.beta * params.r_value * mi).tanh();
                r * r
            })
            .sum::<f64>()
            / n as f64;
        magnetization.push(m);
        tap_residual.push(res);
    }
    Ok(TapRunResult {
        params: params.clone(),
        trace,
        magnetization,
        tap_residual,
    })
}

/// One full run: parameters, coupling, resolvent and `z⁰ ~ N(0, σ★² I)`.
pub fn run_tap_amp(
    ensemble: &TapEnsemble,
    beta: f64,
    theta: f64,
    n: usize,
    t_max: usize,
    seed: u64,
) -> Result<TapRunResult> {
    let opts = TapOptions::default();
    let law = limiting_law(ensemble, &opts)?;
    let params = solve_q_star(beta, theta, &law, Quadrature::default())?;
    run_tap_with_params(ensemble, &params, n, t_max, seed, &opts)
}

pub fn run_tap_with_params(
    ensemble: &TapEnsemble,
    params: &TapParameters,
    n: usize,
    t_max: usize,
    seed: u64,
    opts: &TapOptions,
) -> Result<TapRunResult> {
    let j = build_coupling(ensemble, n, seed, opts)?;
    let m_op = tap_resolvent(&j, params.lambda_star, params.sigma_psi_sq)?;
    let z0 = rng::gaussian_vec(
        n,
        params.sigma_star_sq.sqrt(),
        &mut rng::stream(seed, Domain::Init),
    );
    let mut out = run_tap_iteration(params, &j, &m_op, None, z0, t_max)?;
    out.trace.seed = Some(seed);
    out.trace.ensemble_label = ensemble.label();
    Ok(out)
}
