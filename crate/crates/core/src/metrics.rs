//! Empirical statistics of AMP iterates: successive differences, Hermite
//! moments of standardized iterates, KS distance to the Gaussian limit and
//! cross-ensemble comparisons.

use crate::amp::AmpTrace;
use crate::error::{Error, Result};
use crate::hermite::hermite_all;
use crate::linalg::{dot, norm_sq};
use crate::state_evolution::SeCovariance;

/// Highest Hermite moment carried by a report.
pub const REPORT_MOMENTS: usize = 4;

/// `(1/N) ‖z^t - z^{t-1}‖²` for `t = 1..T` (entry `t - 1`).
pub fn successive_diff(trace: &AmpTrace) -> Vec<f64> {
    let n = trace.n as f64;
    trace
        .iterates
        .windows(2)
        .map(|w| {
            w[1].iter()
                .zip(&w[0])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / n
        })
        .collect()
}

/// Same quantity through `‖a‖² + ‖b‖² - 2⟨a, b⟩`.
pub fn successive_diff_norm_identity(trace: &AmpTrace) -> Vec<f64> {
    let n = trace.n as f64;
    trace
        .iterates
        .windows(2)
        .map(|w| (norm_sq(&w[1]) + norm_sq(&w[0]) - 2.0 * dot(&w[1], &w[0])) / n)
        .collect()
}

/// `(1/N) Σ H_k(v_i / σ)` with orthonormal `H_k`.
pub fn hermite_moment(v: &[f64], k: usize, sigma: f64) -> Result<f64> {
    Ok(hermite_moments(v, k, sigma)?[k])
}

/// Moments `0..=k` in one pass.
pub fn hermite_moments(v: &[f64], k: usize, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if k > crate::hermite::MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree: k,
            cap: crate::hermite::MAX_DEGREE,
        });
    }
    let mut acc = vec![0.0; k + 1];
    let mut buf = vec![0.0; k + 1];
    for &x in v {
        hermite_all(x / sigma, &mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b;
        }
    }
    let n = v.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc[0] = 1.0;
    Ok(acc)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov-Smirnov distance between the empirical law of `v` and
/// `N(0, σ²)`.
pub fn ks_statistic(v: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if v.is_empty() {
        return Err(Error::InvalidArgument(
            "KS statistic of an empty sample".into(),
        ));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = normal_cdf(x / sigma);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// `(1/N) Σ z_i^a z_i^b`.
pub fn coordinate_product_mean(trace: &AmpTrace, a: usize, b: usize) -> Result<f64> {
    let (Some(x), Some(y)) = (trace.iterates.get(a), trace.iterates.get(b)) else {
        return Err(Error::InvalidArgument(format!(
            "iterates {a} and {b} requested from a run with T = {}",
            trace.t_max
        )));
    };
    Ok(dot(x, y) / trace.n as f64)
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Observables of one seed, indexed by `t = 1..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedObservables {
    pub seed: u64,
    pub succ_diff: Vec<f64>,
    pub hermite: Vec<[f64; REPORT_MOMENTS]>,
    pub ks: Vec<f64>,
}

/// Standardizes `z^t` by `σ_t` taken from `sigma_sq[t]`.
pub fn seed_observables(trace: &AmpTrace, sigma_sq: &[f64], seed: u64) -> Result<SeedObservables> {
    if sigma_sq.len() < trace.iterates.len() {
        return Err(Error::InvalidArgument(format!(
            "{} variances for {} iterates",
            sigma_sq.len(),
            trace.iterates.len()
        )));
    }
    let mut hermite = Vec::with_capacity(trace.t_max);
    let mut ks = Vec::with_capacity(trace.t_max);
    for (z, &s2) in trace.iterates.iter().zip(sigma_sq).skip(1) {
        let s = s2.sqrt();
        if s > 0.0 {
            let m = hermite_moments(z, REPORT_MOMENTS, s)?;
            hermite.push([m[1], m[2], m[3], m[4]]);
            ks.push(ks_statistic(z, s)?);
        } else {
            hermite.push([f64::NAN; REPORT_MOMENTS]);
            ks.push(f64::NAN);
        }
    }
    Ok(SeedObservables {
        seed,
        succ_diff: successive_diff(trace),
        hermite,
        ks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t: usize,
    pub succ_diff: f64,
    pub d_pred: f64,
    pub hermite: [f64; REPORT_MOMENTS],
    pub ks: f64,
}

/// Seed-averaged observables with their state-evolution predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableReport {
    pub ensemble: String,
    /// `NaN` outside TAP runs.
    pub beta: f64,
    pub theta: f64,
    pub n: usize,
    pub t_max: usize,
    pub seed_count: usize,
    /// Comment lines written above the CSV header, each starting with `#`.
    pub comments: Vec<String>,
    pub rows: Vec<ReportRow>,
}

pub const REPORT_COLUMNS: &str =
    "ensemble,beta,theta,N,T,seed_count,t,succ_diff,d_pred,h1,h2,h3,h4,ks";

impl ObservableReport {
    /// Averages `seeds` in the order given.
    pub fn aggregate(
        ensemble: &str,
        beta: f64,
        theta: f64,
        n: usize,
        se: &SeCovariance,
        seeds: &[SeedObservables],
    ) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::InvalidArgument("no seeds to aggregate".into()));
        }
        let t_max = seeds[0].succ_diff.len();
        if seeds.iter().any(|s| s.succ_diff.len() != t_max) {
            return Err(Error::InvalidArgument("seeds disagree on T".into()));
        }
        if se.t_max < t_max {
            return Err(Error::InvalidArgument(format!(
                "state evolution covers T = {} but runs have T = {t_max}",
                se.t_max
            )));
        }
        let d = se.successive_diff();
        let k = seeds.len() as f64;
        let rows = (0..t_max)
            .map(|i| {
                let mut h = [0.0; REPORT_MOMENTS];
                for s in seeds {
                    for (a, b) in h.iter_mut().zip(&s.hermite[i]) {
                        *a += b;
                    }
                }
                h.iter_mut().for_each(|a| *a /= k);
                ReportRow {
                    t: i + 1,
                    succ_diff: seeds.iter().map(|s| s.succ_diff[i]).sum::<f64>() / k,
                    d_pred: d[i + 1],
                    hermite: h,
                    ks: seeds.iter().map(|s| s.ks[i]).sum::<f64>() / k,
                }
            })
            .collect();
        Ok(Self {
            ensemble: ensemble.to_string(),
            beta,
            theta,
            n,
            t_max,
            seed_count: seeds.len(),
            comments: Vec::new(),
            rows,
        })
    }

    /// `max |succ_diff(t) - d_t| / d_t` over `t` in `range`.
    pub fn max_relative_se_error(&self, range: std::ops::RangeInclusive<usize>) -> f64 {
        self.rows
            .iter()
            .filter(|r| range.contains(&r.t))
            .map(|r| (r.succ_diff - r.d_pred).abs() / r.d_pred)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            if c.starts_with('#') {
                out.push_str(c);
            } else {
                out.push_str("# ");
                out.push_str(c);
            }
            out.push('\n');
        }
        out.push_str(REPORT_COLUMNS);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.ensemble,
                self.beta,
                self.theta,
                self.n,
                self.t_max,
                self.seed_count,
                r.t,
                r.succ_diff,
                r.d_pred,
                r.hermite[0],
                r.hermite[1],
                r.hermite[2],
                r.hermite[3],
                r.ks
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            source_name: "report".into(),
            line,
            message,
        };
        let mut comments = Vec::new();
        let mut header_seen = false;
        let mut rows = Vec::new();
        let mut meta: Option<(String, f64, f64, usize, usize, usize)> = None;
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            if line.starts_with('#') {
                comments.push(line.to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                if line != REPORT_COLUMNS {
                    return Err(perr(ln, format!("unexpected header {line:?}")));
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 14 {
                return Err(perr(ln, format!("expected 14 fields, found {}", f.len())));
            }
            let num = |j: usize| -> Result<f64> {
                f[j].parse::<f64>()
                    .map_err(|_| perr(ln, format!("field {} is not a number: {:?}", j + 1, f[j])))
            };
            let int = |j: usize| -> Result<usize> {
                f[j].parse::<usize>()
                    .map_err(|_| perr(ln, format!("field {} is not an integer: {:?}", j + 1, f[j])))
            };
            let m = (
                f[0].to_string(),
                num(1)?,
                num(2)?,
                int(3)?,
                int(4)?,
                int(5)?,
            );
            match &meta {
                None => meta = Some(m),
                Some(prev) => {
                    let same = prev.0 == m.0
                        && prev.1.to_bits() == m.1.to_bits()
                        && prev.2.to_bits() == m.2.to_bits()
                        && (prev.3, prev.4, prev.5) == (m.3, m.4, m.5);
                    if !same {
                        return Err(perr(ln, "row metadata differs from the first row".into()));
                    }
                }
            }
            rows.push(ReportRow {
                t: int(6)?,
                succ_diff: num(7)?,
                d_pred: num(8)?,
                hermite: [num(9)?, num(10)?, num(11)?, num(12)?],
                ks: num(13)?,
            });
        }
        let Some((ensemble, beta, theta, n, t_max, seed_count)) = meta else {
            return Err(perr(0, "report has no data rows".into()));
        };
        Ok(Self {
            ensemble,
            beta,
            theta,
            n,
            t_max,
            seed_count,
            comments,
            rows,
        })
    }
}

fn nan_eq(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

/// Largest pairwise absolute difference over `t` and every observable.
pub fn universality_compare(reports: &[ObservableReport]) -> Result<f64> {
    let Some(first) = reports.first() else {
        return Err(Error::InvalidArgument("no reports to compare".into()));
    };
    for r in reports {
        if !(nan_eq(r.beta, first.beta)
            && nan_eq(r.theta, first.theta)
            && r.n == first.n
            && r.t_max == first.t_max
            && r.rows.len() == first.rows.len())
        {
            return Err(Error::InvalidArgument(format!(
                "report for {} does not match the configuration of {}",
                r.ensemble, first.ensemble
            )));
        }
    }
    let mut worst = 0.0f64;
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            for (x, y) in a.rows.iter().zip(&b.rows) {
                worst = worst
                    .max((x.succ_diff - y.succ_diff).abs())
                    .max((x.ks - y.ks).abs());
                for (p, q) in x.hermite.iter().zip(&y.hermite) {
                    worst = worst.max((p - q).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// `max_t max_pairs |succ_diff_a(t) - succ_diff_b(t)| / d_t` over `t` in
/// `range`.
pub fn succ_diff_spread(
    reports: &[ObservableReport],
    range: std::ops::RangeInclusive<usize>,
) -> Result<f64> {
    universality_compare(reports)?;
    let mut worst = 0.0f64;
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            for (x, y) in a.rows.iter().zip(&b.rows) {
                if range.contains(&x.t) {
                    worst = worst.max((x.succ_diff - y.succ_diff).abs() / x.d_pred);
                }
            }
        }
    }
    Ok(worst)
}
