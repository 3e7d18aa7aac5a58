//! Test vectors: Pareto, deterministic power law, lognormal, and explicit
//! signals, plus the tail statistics every error bound is stated in.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    /// i.i.d. Pareto Type I with shape `alpha`, scaled so that
    /// `E ||x_tail(k)||^2 ≈ k^(1 - 2/alpha)`.
    Pareto { alpha: f64 },
    /// `x_i = (i + 1)^(-alpha)`.
    PowerLaw { alpha: f64 },
    /// i.i.d. `exp(sigma_log * Z)`.
    LogNormal { sigma_log: f64 },
    Explicit(Vec<f64>),
}

/// Recipe for a test vector. Random kinds are pure functions of `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub n: usize,
    pub seed: u64,
}

impl SignalSpec {
    pub fn pareto(n: usize, alpha: f64, seed: u64) -> Self {
        Self {
            kind: SignalKind::Pareto { alpha },
            n,
            seed,
        }
    }

    pub fn power_law(n: usize, alpha: f64) -> Self {
        Self {
            kind: SignalKind::PowerLaw { alpha },
            n,
            seed: 0,
        }
    }

    pub fn lognormal(n: usize, sigma_log: f64, seed: u64) -> Self {
        Self {
            kind: SignalKind::LogNormal { sigma_log },
            n,
            seed,
        }
    }

    pub fn explicit(values: Vec<f64>) -> Self {
        Self {
            n: values.len(),
            kind: SignalKind::Explicit(values),
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Whether a fresh seed yields a different vector.
    pub fn is_random(&self) -> bool {
        matches!(
            self.kind,
            SignalKind::Pareto { .. } | SignalKind::LogNormal { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::input("signal length must be at least 1"));
        }
        match &self.kind {
            SignalKind::Pareto { alpha } => check_pareto_alpha(*alpha),
            SignalKind::PowerLaw { alpha } => check_positive("alpha", *alpha),
            SignalKind::LogNormal { sigma_log } => check_positive("sigma_log", *sigma_log),
            SignalKind::Explicit(values) => {
                if values.len() != self.n {
                    return Err(Error::input(format!(
                        "explicit signal has {} values but n = {}",
                        values.len(),
                        self.n
                    )));
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::input(format!("explicit entry {i} is not finite")));
                }
                Ok(())
            }
        }
    }

    pub fn generate(&self) -> Result<Vec<f64>> {
        self.validate()?;
        match &self.kind {
            SignalKind::Pareto { alpha } => generate_pareto(self.n, *alpha, self.seed),
            SignalKind::PowerLaw { alpha } => generate_power_law(self.n, *alpha),
            SignalKind::LogNormal { sigma_log } => generate_lognormal(self.n, *sigma_log, self.seed),
            SignalKind::Explicit(values) => Ok(values.clone()),
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Unsupported(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_pareto_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.5) {
        return Err(Error::Unsupported(format!(
            "Pareto shape must exceed 0.5 for a finite scaled tail, got {alpha}"
        )));
    }
    Ok(())
}

/// Scale `mu = n^(-1/alpha) * sqrt(2/alpha - 1)`.
pub fn pareto_scale(n: usize, alpha: f64) -> f64 {
    (n as f64).powf(-1.0 / alpha) * (2.0 / alpha - 1.0).sqrt()
}

/// `x_i = mu * U^(-1/alpha)` with `U` uniform on `(0, 1]`.
pub fn generate_pareto(n: usize, alpha: f64, seed: u64) -> Result<Vec<f64>> {
    check_pareto_alpha(alpha)?;
    if n == 0 {
        return Err(Error::input("signal length must be at least 1"));
    }
    let mu = pareto_scale(n, alpha);
    let exponent = -1.0 / alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let u = 1.0 - rng.random::<f64>();
            mu * u.powf(exponent)
        })
        .collect())
}

pub fn generate_power_law(n: usize, alpha: f64) -> Result<Vec<f64>> {
    check_positive("alpha", alpha)?;
    Ok((1..=n).map(|i| (i as f64).powf(-alpha)).collect())
}

pub fn generate_lognormal(n: usize, sigma_log: f64, seed: u64) -> Result<Vec<f64>> {
    check_positive("sigma_log", sigma_log)?;
    let dist = LogNormal::new(0.0, sigma_log).map_err(|e| Error::Unsupported(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// Magnitudes sorted decreasing, ties by index.
fn sorted_magnitudes(x: &[f64]) -> Vec<f64> {
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    mags
}

/// `||x_tail(k)||^2`: sum of squares of all but the `k` largest magnitudes.
/// Zero when `k >= n`.
pub fn tail_norm_sq(x: &[f64], k: usize) -> f64 {
    if k >= x.len() {
        return 0.0;
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    if k > 0 {
        mags.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    // Sum smallest-first for a reproducible, accurate total.
    let mut tail = mags.split_off(k);
    tail.sort_unstable_by(f64::total_cmp);
    tail.iter().map(|v| v * v).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailStats {
    pub k: usize,
    /// `||x_tail(k)||_2^2`.
    pub tail_norm_sq: f64,
    /// `|x_(k)| - |x_(2k)|` over the magnitude order statistics.
    pub head_gap: f64,
}

pub fn tail_stats(x: &[f64], k: usize) -> Result<TailStats> {
    if k == 0 {
        return Err(Error::input("k must be at least 1"));
    }
    if 2 * k > x.len() {
        return Err(Error::input(format!(
            "tail statistics need 2k <= n (k = {k}, n = {})",
            x.len()
        )));
    }
    let mags = sorted_magnitudes(x);
    let tail_norm_sq = mags[k..].iter().rev().map(|v| v * v).sum();
    Ok(TailStats {
        k,
        tail_norm_sq,
        head_gap: mags[k - 1] - mags[2 * k - 1],
    })
}

/// `head_gap / (||x_tail(k)|| / sqrt(k))`. When the tail is zero the ratio is
/// reported as `+inf` with `unbounded` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRatio {
    pub ratio: f64,
    pub unbounded: bool,
}

pub fn decay_condition_ratio(x: &[f64], k: usize) -> Result<DecayRatio> {
    let stats = tail_stats(x, k)?;
    if stats.tail_norm_sq == 0.0 {
        return Ok(DecayRatio {
            ratio: f64::INFINITY,
            unbounded: true,
        });
    }
    let scale = (stats.tail_norm_sq / k as f64).sqrt();
    Ok(DecayRatio {
        ratio: stats.head_gap / scale,
        unbounded: false,
    })
}

/// Writes one value per line in shortest round-trip decimal form.
pub fn write_vector<W: Write>(mut out: W, x: &[f64]) -> std::io::Result<()> {
    for v in x {
        writeln!(out, "{v:?}")?;
    }
    Ok(())
}

/// Reads one value per line. Blank lines and `#` comments are skipped.
pub fn read_vector<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::input(format!("line {}: {e}", lineno + 1)))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let v: f64 = text
            .parse()
            .map_err(|_| Error::input(format!("line {}: cannot parse {text:?}", lineno + 1)))?;
        if !v.is_finite() {
            return Err(Error::input(format!("line {}: value is not finite", lineno + 1)));
        }
        out.push(v);
    }
    Ok(out)
}
