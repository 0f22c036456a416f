//! Experiment harness behind the `amp-lab` binary: configuration, seed
//! sweeps and CSV output.
//!
//! Every entry point here is usable from library code; the binary only maps
//! command-line flags onto [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::amp::{run_amp, AmpMode, AmpTrace};
use crate::ensembles::{
    build_random_orthogonal, build_sign_perm, build_signed_hadamard, build_signed_sine,
    build_wigner_coupling, build_wishart_coupling, centered_resolvent, check_semi_random,
    DiagnosticMode, EnsembleDiagnostics, EntryKind, MatrixOperator,
};
use crate::error::{Error, Result};
use crate::hermite::DEFAULT_DEGREE;
use crate::metrics::{seed_observables, ObservableReport, SeedObservables};
use crate::rng::{self, Domain};
use crate::spectral::{parse_eigenvalues, SpectralLaw};
use crate::state_evolution::{run_state_evolution, Nonlinearity, SeCovariance};
use crate::tap::{
    limiting_law, run_tap_with_params, solve_q_star, tap_state_evolution, Quadrature, TapEnsemble,
    TapOptions, TapParameters,
};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "AMP_LAB_THREADS";

/// Operators accepted in `simple` and `projected` runs.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    SignedSine,
    SignedHadamard,
    RandomOrthogonal,
    WignerResolvent { lambda: f64 },
    WishartResolvent { phi: f64, lambda: f64 },
    SignPerm { spectrum: Arc<[f64]> },
}

fn parse_options(args: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for kv in args.split([',', ';']).filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, found {kv:?}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn take_f64(opts: &mut BTreeMap<String, String>, key: &str, spec: &str) -> Result<f64> {
    let v = opts
        .remove(key)
        .ok_or_else(|| Error::InvalidArgument(format!("{spec:?} needs {key}=<value>")))?;
    v.parse()
        .map_err(|_| Error::InvalidArgument(format!("{key} value {v:?} is not a number")))
}

fn reject_rest(opts: BTreeMap<String, String>, spec: &str) -> Result<()> {
    match opts.keys().next() {
        Some(k) => Err(Error::InvalidArgument(format!(
            "unknown option {k:?} in {spec:?}"
        ))),
        None => Ok(()),
    }
}

impl FromStr for OperatorSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (head, args) = s.split_once(':').unwrap_or((s, ""));
        let mut opts = parse_options(args)?;
        let spec = match head {
            "signed-sine" => Self::SignedSine,
            "signed-hadamard" => Self::SignedHadamard,
            "random-orthogonal" => Self::RandomOrthogonal,
            "wigner-resolvent" => Self::WignerResolvent {
                lambda: take_f64(&mut opts, "lambda", s)?,
            },
            "wishart-resolvent" => Self::WishartResolvent {
                phi: take_f64(&mut opts, "phi", s)?,
                lambda: take_f64(&mut opts, "lambda", s)?,
            },
            "sign-perm" => {
                if let Some(b) = opts.remove("base") {
                    if b != "hadamard" {
                        return Err(Error::InvalidArgument(format!(
                            "unsupported sign-perm base {b:?}"
                        )));
                    }
                }
                let file = opts.remove("spectrum").ok_or_else(|| {
                    Error::InvalidArgument(format!("{s:?} needs spectrum=<file>"))
                })?;
                let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
                Self::SignPerm {
                    spectrum: parse_eigenvalues(&text, &file)?.into(),
                }
            }
            _ => return Err(Error::InvalidArgument(format!("unknown operator {s:?}"))),
        };
        reject_rest(opts, s)?;
        Ok(spec)
    }
}

impl OperatorSpec {
    pub fn label(&self) -> String {
        match self {
            Self::SignedSine => "signed-sine".into(),
            Self::SignedHadamard => "signed-hadamard".into(),
            Self::RandomOrthogonal => "random-orthogonal".into(),
            Self::WignerResolvent { lambda } => format!("wigner-resolvent:lambda={lambda}"),
            Self::WishartResolvent { phi, lambda } => {
                format!("wishart-resolvent:phi={phi};lambda={lambda}")
            }
            Self::SignPerm { .. } => "sign-perm".into(),
        }
    }

    /// `σψ²` of the limiting ensemble, shared by every seed.
    pub fn limit_sigma_psi_sq(&self) -> Result<f64> {
        match self {
            Self::SignedSine | Self::SignedHadamard | Self::RandomOrthogonal => Ok(1.0),
            Self::WignerResolvent { lambda } => {
                SpectralLaw::semicircle().resolvent_variance(*lambda)
            }
            Self::WishartResolvent { phi, lambda } => {
                SpectralLaw::marchenko_pastur(*phi)?.resolvent_variance(*lambda)
            }
            Self::SignPerm { spectrum } => {
                Ok(spectrum.iter().map(|x| x * x).sum::<f64>() / spectrum.len() as f64)
            }
        }
    }

    pub fn build(&self, n: usize, seed: u64) -> Result<MatrixOperator> {
        match self {
            Self::SignedSine => build_signed_sine(n, seed),
            Self::SignedHadamard => build_signed_hadamard(n, seed),
            Self::RandomOrthogonal => build_random_orthogonal(n, seed),
            Self::WignerResolvent { lambda } => {
                let j = build_wigner_coupling(n, seed, EntryKind::Rademacher)?;
                centered_resolvent(&j, *lambda, self.limit_sigma_psi_sq()?)
            }
            Self::WishartResolvent { phi, lambda } => {
                let j = build_wishart_coupling(n, *phi, seed, EntryKind::Rademacher)?;
                centered_resolvent(&j, *lambda, self.limit_sigma_psi_sq()?)
            }
            Self::SignPerm { spectrum } => {
                if spectrum.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "spectrum file has {} values for N = {n}",
                        spectrum.len()
                    )));
                }
                build_sign_perm(spectrum, seed)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    #[default]
    Simple,
    Projected,
    Tap,
}

impl FromStr for RunMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Self::Simple),
            "projected" => Ok(Self::Projected),
            "tap" => Ok(Self::Tap),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Simple => "simple",
            Self::Projected => "projected",
            Self::Tap => "tap",
        }
    }
}

/// Parses `a..b` (inclusive), a single integer, or a comma list of either.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidArgument(format!("bad seed list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one seed is required".into(),
        ));
    }
    Ok(out)
}

/// Compact form of a seed list: `a..b` when contiguous.
pub fn format_seeds(seeds: &[u64]) -> String {
    match seeds {
        [] => String::new(),
        [one] => one.to_string(),
        [first, .., last] if seeds.windows(2).all(|w| w[1] == w[0] + 1) => {
            format!("{first}..{last}")
        }
        _ => seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Operator spec in `simple`/`projected` mode, TAP ensemble in `tap` mode.
    pub ensemble: String,
    pub n: usize,
    pub t_max: usize,
    pub beta: f64,
    pub theta: f64,
    pub seeds: Vec<u64>,
    pub mode: RunMode,
    /// Preset name for non-TAP runs.
    pub nonlinearity: String,
    /// Initial variance in non-TAP runs (TAP runs use `σ★²`).
    pub sigma0_sq: f64,
    /// Report CSV path; per-seed files are written next to it.
    pub output: Option<PathBuf>,
    /// Also write every iterate of every seed.
    pub trace: bool,
    /// Hermite truncation degree of the state evolution.
    pub degree: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ensemble: "signed-sine".into(),
            n: 1024,
            t_max: 10,
            beta: 2.0,
            theta: 2.0,
            seeds: vec![1],
            mode: RunMode::Simple,
            nonlinearity: "square".into(),
            sigma0_sq: 1.0,
            output: None,
            trace: false,
            degree: DEFAULT_DEGREE,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value {v:?} for {key}")))
}

impl ExperimentConfig {
    /// Sets one `key = value` pair. Keys match the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "ensemble" => self.ensemble = v.to_string(),
            "N" | "n" => self.n = parse_value(key, v)?,
            "T" | "t" => self.t_max = parse_value(key, v)?,
            "beta" => self.beta = parse_value(key, v)?,
            "theta" => self.theta = parse_value(key, v)?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "mode" => self.mode = v.parse()?,
            "nonlinearity" => self.nonlinearity = v.to_string(),
            "sigma0_sq" | "sigma0-sq" => self.sigma0_sq = parse_value(key, v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            "trace" => self.trace = parse_value(key, v)?,
            "degree" => self.degree = parse_value(key, v)?,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Applies a `key = value` file with `#` comments.
    pub fn apply_file_text(&mut self, text: &str, source_name: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                source_name: source_name.to_string(),
                line: i + 1,
                message: format!("expected key = value, found {line:?}"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                source_name: source_name.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_file_text(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "N must be at least 2, got {}",
                self.n
            )));
        }
        if self.t_max < 1 {
            return Err(Error::InvalidArgument("T must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one seed is required".into(),
            ));
        }
        if !(self.sigma0_sq > 0.0 && self.sigma0_sq.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma0_sq must be positive, got {}",
                self.sigma0_sq
            )));
        }
        Ok(())
    }
}

/// Runs `f` on a rayon pool capped by `AMP_LAB_THREADS` when it is set.
pub fn with_worker_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let k: usize = v.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "{THREADS_ENV} must be a positive integer, got {v:?}"
                ))
            })?;
            if k == 0 {
                return Err(Error::InvalidArgument(format!(
                    "{THREADS_ENV} must be positive"
                )));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ObservableReport,
    pub se: SeCovariance,
    pub per_seed: Vec<SeedObservables>,
    pub traces: Vec<AmpTrace>,
    pub tap: Option<TapParameters>,
}

/// Builds the ensemble, runs state evolution, runs every seed on the worker
/// pool and writes the CSVs when `config.output` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let seeds_str = format_seeds(&config.seeds);
    let (se, traces, tap, label, mut comments) = match config.mode {
        RunMode::Tap => {
            let ens: TapEnsemble = config.ensemble.parse()?;
            let opts = TapOptions::default();
            let law = limiting_law(&ens, &opts)?;
            let params = solve_q_star(config.beta, config.theta, &law, Quadrature::default())?;
            let se = tap_state_evolution(&params, config.t_max, config.degree)?;
            let traces = with_worker_pool(|| {
                config
                    .seeds
                    .par_iter()
                    .map(|&s| {
                        run_tap_with_params(&ens, &params, config.n, config.t_max, s, &opts)
                            .map(|r| r.trace)
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            let comments = vec![
                params.header_line(Some(&seeds_str)),
                format!(
                    "# mode=tap sigma_star_sq={:.16e} law={}",
                    params.sigma_star_sq,
                    law.label()
                ),
            ];
            (se, traces, Some(params), ens.label(), comments)
        }
        RunMode::Simple | RunMode::Projected => {
            let spec: OperatorSpec = config.ensemble.parse()?;
            let f = Nonlinearity::preset(&config.nonlinearity)?;
            let s2 = spec.limit_sigma_psi_sq()?;
            let se = run_state_evolution(&[f], config.sigma0_sq, s2, config.t_max, config.degree)?;
            let centered = se.centered.clone();
            let amp_mode = if config.mode == RunMode::Simple {
                AmpMode::Simple
            } else {
                AmpMode::Projected
            };
            let traces = with_worker_pool(|| {
                config
                    .seeds
                    .par_iter()
                    .map(|&s| {
                        let op = spec.build(config.n, s)?;
                        let z0 = rng::gaussian_vec(
                            config.n,
                            config.sigma0_sq.sqrt(),
                            &mut rng::stream(s, Domain::Init),
                        );
                        let mut tr = run_amp(&op, &centered, z0, config.t_max, amp_mode)?;
                        tr.seed = Some(s);
                        tr.ensemble_label = spec.label();
                        Ok(tr)
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            let comments = vec![format!(
                "# mode={} nonlinearity={} sigma0_sq={:.16e} sigma_psi_sq={:.16e} seed={seeds_str}",
                config.mode.as_str(),
                config.nonlinearity,
                config.sigma0_sq,
                s2
            )];
            (se, traces, None, spec.label(), comments)
        }
    };
    let per_seed = with_worker_pool(|| {
        traces
            .par_iter()
            .zip(&config.seeds)
            .map(|(tr, &s)| seed_observables(tr, &se.sigma_sq, s))
            .collect::<Result<Vec<_>>>()
    })??;
    let (beta, theta) = match config.mode {
        RunMode::Tap => (config.beta, config.theta),
        _ => (f64::NAN, f64::NAN),
    };
    let mut report = ObservableReport::aggregate(&label, beta, theta, config.n, &se, &per_seed)?;
    comments.push(format!(
        "# N={} T={} degree={}",
        config.n, config.t_max, config.degree
    ));
    report.comments = comments;
    let out = ExperimentOutput {
        report,
        se,
        per_seed,
        traces,
        tap,
    };
    if let Some(path) = &config.output {
        write_outputs(&out, path, config.trace)?;
    }
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the report CSV.
pub fn emit_report(report: &ObservableReport, path: &Path) -> Result<()> {
    write_file(path, &report.to_csv())
}

/// `<dir>/<stem>.<suffix>` next to `path`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn seed_csv(obs: &SeedObservables, header: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{header}");
    out.push_str("t,succ_diff,hermite_m1,hermite_m2,hermite_m3,hermite_m4,ks_stat\n");
    for (i, d) in obs.succ_diff.iter().enumerate() {
        let h = obs.hermite[i];
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            i + 1,
            d,
            h[0],
            h[1],
            h[2],
            h[3],
            obs.ks[i]
        );
    }
    out
}

/// One row per `t`: `t` followed by the `N` entries of `z^t`.
pub fn trace_csv(trace: &AmpTrace) -> String {
    let mut out = String::new();
    out.push('t');
    for i in 0..trace.n {
        let _ = write!(out, ",z{i}");
    }
    out.push('\n');
    for (t, z) in trace.iterates.iter().enumerate() {
        let _ = write!(out, "{t}");
        for x in z {
            let _ = write!(out, ",{x:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Report at `path`, per-seed observables at `<stem>.seed<k>.csv` and, with
/// `trace`, iterates at `<stem>.seed<k>.trace.csv`.
pub fn write_outputs(out: &ExperimentOutput, path: &Path, trace: bool) -> Result<()> {
    emit_report(&out.report, path)?;
    for (obs, tr) in out.per_seed.iter().zip(&out.traces) {
        let header = match &out.tap {
            Some(p) => p.header_line(Some(&obs.seed.to_string())),
            None => format!("# ensemble={} seed={}", out.report.ensemble, obs.seed),
        };
        write_file(
            &sibling_path(path, &format!("seed{}.csv", obs.seed)),
            &seed_csv(obs, &header),
        )?;
        if trace {
            write_file(
                &sibling_path(path, &format!("seed{}.trace.csv", obs.seed)),
                &trace_csv(tr),
            )?;
        }
    }
    Ok(())
}

/// `t,sigma_sq,rho_prev,d_pred`; `rho_prev` and `d_pred` are empty at `t = 0`.
pub fn se_csv(se: &SeCovariance, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "{c}");
    }
    out.push_str("t,sigma_sq,rho_prev,d_pred\n");
    let d = se.successive_diff();
    for t in 0..=se.t_max {
        if t == 0 {
            let _ = writeln!(out, "0,{:.16e},,", se.sigma_sq[0]);
        } else {
            let _ = writeln!(
                out,
                "{t},{:.16e},{:.16e},{:.16e}",
                se.sigma_sq[t],
                se.rho(t - 1, t),
                d[t]
            );
        }
    }
    out
}

/// Inputs of the `se` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct SeRequest {
    /// `tap` or a nonlinearity preset.
    pub preset: String,
    pub t_max: usize,
    pub beta: f64,
    pub theta: f64,
    /// TAP law: any TAP ensemble string.
    pub ensemble: String,
    pub sigma0_sq: f64,
    pub sigma_psi_sq: f64,
    pub degree: usize,
}

impl Default for SeRequest {
    fn default() -> Self {
        Self {
            preset: "tap".into(),
            t_max: 10,
            beta: 2.0,
            theta: 2.0,
            ensemble: "signed-sine".into(),
            sigma0_sq: 1.0,
            sigma_psi_sq: 1.0,
            degree: DEFAULT_DEGREE,
        }
    }
}

pub fn run_se(req: &SeRequest) -> Result<String> {
    if req.t_max < 1 {
        return Err(Error::InvalidArgument("T must be at least 1".into()));
    }
    if req.preset == "tap" {
        let ens: TapEnsemble = req.ensemble.parse()?;
        let law = limiting_law(&ens, &TapOptions::default())?;
        let p = solve_q_star(req.beta, req.theta, &law, Quadrature::default())?;
        let se = tap_state_evolution(&p, req.t_max, req.degree)?;
        Ok(se_csv(
            &se,
            &[p.header_line(None), format!("# law={}", law.label())],
        ))
    } else {
        let f = Nonlinearity::preset(&req.preset)?;
        let se = run_state_evolution(&[f], req.sigma0_sq, req.sigma_psi_sq, req.t_max, req.degree)?;
        Ok(se_csv(
            &se,
            &[format!(
                "# preset={} sigma0_sq={:.16e} sigma_psi_sq={:.16e}",
                req.preset, req.sigma0_sq, req.sigma_psi_sq
            )],
        ))
    }
}

/// Semi-random diagnostics for one realization of an operator spec.
pub fn check_ensemble(
    spec: &str,
    n: usize,
    seed: u64,
    mode: DiagnosticMode,
) -> Result<EnsembleDiagnostics> {
    let spec: OperatorSpec = spec.parse()?;
    check_semi_random(&spec.build(n, seed)?, mode)
}

/// Single-line machine-parseable error record.
pub fn error_record(e: &Error) -> String {
    let msg = e
        .to_string()
        .replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', " ");
    format!("error kind={} message=\"{msg}\"", e.kind())
}
