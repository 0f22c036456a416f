//! The memory-free AMP iteration.
//!
//! Simple mode: `z^{t+1} = M f_{t+1}(z^t)`.
//! Projected mode: `z^{t+1} = M (f_{t+1}(z^t) - α_t z^t)` with
//! `α_t = ⟨f_{t+1}(z^t), z^t⟩ / ‖z^t‖²`.

use std::str::FromStr;

use crate::ensembles::MatrixOperator;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq};
use crate::rng::{self, Domain};
use crate::state_evolution::Nonlinearity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmpMode {
    #[default]
    Simple,
    Projected,
}

impl FromStr for AmpMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Self::Simple),
            "projected" => Ok(Self::Projected),
            _ => Err(Error::InvalidArgument(format!("unknown AMP mode {s:?}"))),
        }
    }
}

impl AmpMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Simple => "simple",
            Self::Projected => "projected",
        }
    }
}

/// Iterates `z^0..z^T` of one run.
#[derive(Debug, Clone)]
pub struct AmpTrace {
    pub n: usize,
    pub t_max: usize,
    pub iterates: Vec<Vec<f64>>,
    pub mode: AmpMode,
    /// Seed of the Gaussian initialization, when one was used.
    pub seed: Option<u64>,
    pub ensemble_label: String,
    /// `α_t` for `t = 0..T-1` in projected mode; empty otherwise.
    pub alphas: Vec<f64>,
}

/// `N` i.i.d. `N(0, σ0²)` draws from the initialization stream of `seed`.
pub fn gaussian_init(n: usize, sigma0: f64, seed: u64) -> Vec<f64> {
    rng::gaussian_vec(n, sigma0, &mut rng::stream(seed, Domain::Init))
}

fn first_non_finite(v: &[f64]) -> Option<usize> {
    v.iter().position(|x| !x.is_finite())
}

/// Runs `T` steps. `nonlins` holds `f_1..f_T`, or a single function used at
/// every step.
pub fn run_amp(
    op: &MatrixOperator,
    nonlins: &[Nonlinearity],
    z0: Vec<f64>,
    t_max: usize,
    mode: AmpMode,
) -> Result<AmpTrace> {
    let n = op.dim();
    if z0.len() != n {
        return Err(Error::InvalidArgument(format!(
            "initial vector has length {} for operator dimension {n}",
            z0.len()
        )));
    }
    if t_max == 0 {
        return Err(Error::InvalidArgument("AMP needs T >= 1".into()));
    }
    if !(nonlins.len() == t_max || nonlins.len() == 1) {
        return Err(Error::InvalidArgument(format!(
            "{} nonlinearities supplied for T = {t_max}",
            nonlins.len()
        )));
    }
    if let Some(i) = first_non_finite(&z0) {
        return Err(Error::Numeric(format!(
            "initial iterate is not finite at index {i}"
        )));
    }
    let mut iterates = Vec::with_capacity(t_max + 1);
    iterates.push(z0);
    let mut alphas = Vec::new();
    let mut fz = vec![0.0; n];
    for t in 0..t_max {
        let f = if nonlins.len() == 1 {
            &nonlins[0]
        } else {
            &nonlins[t]
        };
        let z = &iterates[t];
        for (o, &x) in fz.iter_mut().zip(z) {
            *o = f.eval(x);
        }
        if let Some(i) = first_non_finite(&fz) {
            return Err(Error::Numeric(format!(
                "{} produced a non-finite value at step {} index {i}",
                f.label(),
                t + 1
            )));
        }
        if mode == AmpMode::Projected {
            let zz = norm_sq(z);
            if zz == 0.0 {
                return Err(Error::Numeric(format!("iterate z^{t} has zero norm")));
            }
            let alpha = dot(&fz, z) / zz;
            for (o, &x) in fz.iter_mut().zip(z) {
                *o -= alpha * x;
            }
            alphas.push(alpha);
        }
        let next = op.apply(&fz)?;
        if let Some(i) = first_non_finite(&next) {
            return Err(Error::Numeric(format!(
                "iterate z^{} is not finite at index {i}",
                t + 1
            )));
        }
        iterates.push(next);
    }
    Ok(AmpTrace {
        n,
        t_max,
        iterates,
        mode,
        seed: None,
        ensemble_label: op.label().to_string(),
        alphas,
    })
}
