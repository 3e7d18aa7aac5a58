use rayon::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{m_value, topk_error, ErrorSample};
use crate::error::{Error, Result};
use crate::estimators::{estimate_vector, point_estimate, point_estimate_countmin};
use crate::hashing::derive_seed;
use crate::signals::{tail_norm_sq, SignalSpec};
use crate::sketch::{CountMinTable, CountSketchTable, SketchConfig, SketchKind};
use crate::stats::{
    bootstrap_ratio_ci, fit_line, mean, quantile, ratio_of_means, stddev, trim_upper, variance,
    Histogram, Interval, LineFit, PairedSums, TRIM_QUANTILE,
};

const STREAM_SIGNAL: u64 = 0x5167;
const STREAM_SKETCH: u64 = 0x5ce7;
const STREAM_INDEX: u64 = 0x1dc5;
const STREAM_BOOTSTRAP: u64 = 0xb007;

/// Which coordinates a trial measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexPolicy {
    /// `per_trial` coordinates drawn uniformly with replacement.
    Uniform { per_trial: usize },
    /// Every coordinate.
    All,
}

impl IndexPolicy {
    fn validate(self) -> Result<()> {
        match self {
            IndexPolicy::Uniform { per_trial: 0 } => {
                Err(Error::input("at least one coordinate per trial is required"))
            }
            _ => Ok(()),
        }
    }
}

/// The signal and seeds of one trial. Signal seeds depend only on the signal
/// spec and the trial index, so experiments over different sketch shapes see
/// the same vectors.
struct TrialInput {
    x: Vec<f64>,
    signal_seed: u64,
    sketch_seed: u64,
}

fn trial_input(signal: &SignalSpec, config: &SketchConfig, trial: u64) -> Result<TrialInput> {
    let signal_seed = if signal.is_random() {
        derive_seed(signal.seed, STREAM_SIGNAL, trial)
    } else {
        signal.seed
    };
    let x = signal.with_seed(signal_seed).generate()?;
    Ok(TrialInput {
        x,
        signal_seed,
        sketch_seed: derive_seed(config.master_seed, STREAM_SKETCH, trial),
    })
}

fn sample_indices(config: &SketchConfig, trial: u64, n: usize, policy: IndexPolicy) -> Vec<usize> {
    match policy {
        IndexPolicy::All => (0..n).collect(),
        IndexPolicy::Uniform { per_trial } => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.master_seed, STREAM_INDEX, trial));
            (0..per_trial).map(|_| rng.random_range(0..n)).collect()
        }
    }
}

fn check_common(signal: &SignalSpec, config: &SketchConfig, trials: usize) -> Result<()> {
    signal.validate()?;
    config.validate()?;
    if trials == 0 {
        return Err(Error::input("trials must be at least 1"));
    }
    Ok(())
}

fn check_k(signal: &SignalSpec, k: usize) -> Result<()> {
    if k == 0 || 2 * k > signal.n {
        return Err(Error::input(format!("need 1 <= k and 2k <= n (k = {k}, n = {})", signal.n)));
    }
    Ok(())
}

fn count_sketch_only(config: &SketchConfig) -> Result<()> {
    if config.kind != SketchKind::CountSketch {
        return Err(Error::config("this experiment requires a Count-Sketch configuration"));
    }
    Ok(())
}

fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(f).collect()
}

/// Point errors over many trials, reported normalized by `m_{R,C}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointErrorReport {
    pub config: SketchConfig,
    pub trials: usize,
    pub normalizer: f64,
    pub samples: Vec<ErrorSample>,
    /// Every `E_p / m_{R,C}` in trial order.
    pub normalized: Vec<f64>,
    pub histogram: Histogram,
    /// Mean and standard deviation after discarding the far tail.
    pub mean: f64,
    pub stddev: f64,
    /// `E[xhat_i - x_i]`; positive for Count-Min.
    pub mean_signed_error: f64,
}

/// Draws fresh signal and sketch per trial, estimates the sampled
/// coordinates, and histograms `|xhat_i - x_i| / m_{R,C}`. Works for either
/// sketch kind.
pub fn point_error_experiment(
    signal: &SignalSpec,
    config: &SketchConfig,
    trials: usize,
    policy: IndexPolicy,
) -> Result<PointErrorReport> {
    check_common(signal, config, trials)?;
    policy.validate()?;
    let normalizer = m_value(config.rows, config.columns);

    let per_trial = run_trials(trials, |trial| {
        let input = trial_input(signal, config, trial)?;
        let cfg = config.with_seed(input.sketch_seed);
        let idx = sample_indices(config, trial, input.x.len(), policy);
        let estimates: Vec<f64> = match config.kind {
            SketchKind::CountSketch => {
                let table = CountSketchTable::from_vector(cfg, &input.x)?;
                idx.iter().map(|&i| point_estimate(&table, i as u64)).collect()
            }
            SketchKind::CountMin => {
                if let Some(i) = input.x.iter().position(|&v| v < 0.0) {
                    return Err(Error::input(format!(
                        "Count-Min needs a nonnegative signal; entry {i} is negative"
                    )));
                }
                let table = CountMinTable::from_vector(cfg, &input.x)?;
                idx.iter().map(|&i| point_estimate_countmin(&table, i as u64)).collect()
            }
        };
        let signed: f64 = idx.iter().zip(&estimates).map(|(&i, e)| e - input.x[i]).sum();
        let errors = idx
            .iter()
            .zip(&estimates)
            .map(|(&i, e)| (e - input.x[i]).abs())
            .collect();
        let sample = ErrorSample {
            trial,
            signal_seed: input.signal_seed,
            sketch_seed: input.sketch_seed,
            point_errors: errors,
            topk_error: None,
            normalizer,
            tail_norm_sq_k: None,
            tail_norm_sq_c: tail_norm_sq(&input.x, config.columns as usize),
        };
        Ok((sample, signed, idx.len()))
    })?;

    let mut samples = Vec::with_capacity(trials);
    let (mut signed_sum, mut count) = (0.0, 0usize);
    for (s, signed, len) in per_trial {
        signed_sum += signed;
        count += len;
        samples.push(s);
    }
    let normalized: Vec<f64> = samples
        .iter()
        .flat_map(|s| s.point_errors.iter().map(|e| e / normalizer))
        .collect();
    let trimmed = trim_upper(&normalized);
    Ok(PointErrorReport {
        config: *config,
        trials,
        normalizer,
        histogram: Histogram::standard(&normalized),
        mean: mean(&trimmed),
        stddev: stddev(&trimmed),
        mean_signed_error: signed_sum / count as f64,
        normalized,
        samples,
    })
}

/// Outcome of checking the worst-case guarantee
/// `max_i (xhat_i - x_i)^2 <= ||x_tail(k)||^2 / k` per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct LinfReport {
    pub k: usize,
    pub trials: usize,
    /// Per trial: `max_i (xhat_i - x_i)^2 / (||x_tail(k)||^2 / k)`.
    pub ratios: Vec<f64>,
    pub fraction_within: f64,
}

pub fn linf_l2_experiment(signal: &SignalSpec, config: &SketchConfig, k: usize, trials: usize) -> Result<LinfReport> {
    check_common(signal, config, trials)?;
    count_sketch_only(config)?;
    check_k(signal, k)?;
    let ratios = run_trials(trials, |trial| {
        let input = trial_input(signal, config, trial)?;
        let table = CountSketchTable::from_vector(config.with_seed(input.sketch_seed), &input.x)?;
        let est = estimate_vector(&table, input.x.len())?;
        let worst = est
            .values
            .iter()
            .zip(&input.x)
            .map(|(e, x)| (e - x) * (e - x))
            .fold(0.0, f64::max);
        let bound = tail_norm_sq(&input.x, k) / k as f64;
        Ok(if bound > 0.0 {
            worst / bound
        } else if worst == 0.0 {
            0.0
        } else {
            f64::INFINITY
        })
    })?;
    let within = ratios.iter().filter(|&&r| r <= 1.0).count();
    Ok(LinfReport {
        k,
        trials,
        fraction_within: within as f64 / trials as f64,
        ratios,
    })
}

/// Monte-Carlo estimate of
/// `Pr[(xhat_i - x_i)^2 > (t/R) * ||x_tail(k)||^2 / k]` on a grid of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    pub k: usize,
    pub t_grid: Vec<f64>,
    pub empirical_prob: Vec<f64>,
    /// 95% half-width from the spread of per-trial frequencies.
    pub ci_halfwidth: Vec<f64>,
    pub trials: usize,
    pub samples_per_trial: usize,
    /// Least-squares fit of `ln prob` against `t` over the usable window.
    pub fit: Option<LineFit>,
}

/// Fewest grid points a slope is fitted through.
pub const MIN_FIT_POINTS: usize = 3;

impl TailCurve {
    pub fn total_samples(&self) -> usize {
        self.trials * self.samples_per_trial
    }

    /// Probability window `[10 / samples, 0.5]` the slope is fitted over.
    pub fn usable_window(&self) -> (f64, f64) {
        (10.0 / self.total_samples() as f64, 0.5)
    }

    pub fn is_degenerate(&self) -> bool {
        self.fit.is_none()
    }

    fn fit_slope(&mut self) {
        let (lo, hi) = self.usable_window();
        let (ts, logs): (Vec<f64>, Vec<f64>) = self
            .t_grid
            .iter()
            .zip(&self.empirical_prob)
            .filter(|(_, &p)| p >= lo && p <= hi)
            .map(|(&t, &p)| (t, p.ln()))
            .unzip();
        self.fit = if ts.len() >= MIN_FIT_POINTS {
            fit_line(&ts, &logs)
        } else {
            None
        };
    }
}

pub fn tail_curve_experiment(
    signal: &SignalSpec,
    config: &SketchConfig,
    k: usize,
    t_grid: &[f64],
    trials: usize,
    policy: IndexPolicy,
) -> Result<TailCurve> {
    check_common(signal, config, trials)?;
    count_sketch_only(config)?;
    check_k(signal, k)?;
    policy.validate()?;
    if t_grid.is_empty() {
        return Err(Error::input("t grid is empty"));
    }
    let r = f64::from(config.rows);
    if t_grid.iter().any(|&t| !(t > 0.0 && t <= r)) {
        return Err(Error::input(format!("t values must lie in (0, R] = (0, {r}]")));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("t grid must be strictly increasing"));
    }
    let samples_per_trial = match policy {
        IndexPolicy::All => signal.n,
        IndexPolicy::Uniform { per_trial } => per_trial,
    };

    let fractions = run_trials(trials, |trial| {
        let input = trial_input(signal, config, trial)?;
        let table = CountSketchTable::from_vector(config.with_seed(input.sketch_seed), &input.x)?;
        let idx = sample_indices(config, trial, input.x.len(), policy);
        let mut sq: Vec<f64> = idx
            .iter()
            .map(|&i| {
                let e = point_estimate(&table, i as u64) - input.x[i];
                e * e
            })
            .collect();
        sq.sort_unstable_by(f64::total_cmp);
        let scale = tail_norm_sq(&input.x, k) / k as f64;
        let len = sq.len() as f64;
        Ok(t_grid
            .iter()
            .map(|&t| {
                let threshold = t / r * scale;
                let at_or_below = sq.partition_point(|&v| v <= threshold);
                (sq.len() - at_or_below) as f64 / len
            })
            .collect::<Vec<f64>>())
    })?;

    let tn = trials as f64;
    let mut empirical_prob = Vec::with_capacity(t_grid.len());
    let mut ci_halfwidth = Vec::with_capacity(t_grid.len());
    for j in 0..t_grid.len() {
        let col: Vec<f64> = fractions.iter().map(|f| f[j]).collect();
        empirical_prob.push(mean(&col));
        ci_halfwidth.push(1.96 * stddev(&col) / tn.sqrt());
    }
    let mut curve = TailCurve {
        k,
        t_grid: t_grid.to_vec(),
        empirical_prob,
        ci_halfwidth,
        trials,
        samples_per_trial,
        fit: None,
    };
    curve.fit_slope();
    Ok(curve)
}

/// Distribution of the top-k error over many trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKReport {
    pub config: SketchConfig,
    pub k: usize,
    pub trials: usize,
    pub normalizer: f64,
    pub samples: Vec<ErrorSample>,
    /// `E_k / (m_{R,C} * sqrt(k))` per trial.
    pub normalized: Vec<f64>,
    pub histogram: Histogram,
    /// Far-tail-trimmed mean of [`Self::normalized`].
    pub mean_normalized: f64,
    /// Far-tail-trimmed mean of `E_k`.
    pub mean_error: f64,
    /// Variance of `E_k / E[E_k]` over the trimmed trials.
    pub relative_variance: f64,
}

pub fn topk_experiment(signal: &SignalSpec, config: &SketchConfig, k: usize, trials: usize) -> Result<TopKReport> {
    check_common(signal, config, trials)?;
    count_sketch_only(config)?;
    check_k(signal, k)?;
    let normalizer = m_value(config.rows, config.columns);
    let samples = run_trials(trials, |trial| {
        let input = trial_input(signal, config, trial)?;
        let table = CountSketchTable::from_vector(config.with_seed(input.sketch_seed), &input.x)?;
        let est = estimate_vector(&table, input.x.len())?;
        let ek = topk_error(&input.x, &est.values, k)?;
        Ok(ErrorSample {
            trial,
            signal_seed: input.signal_seed,
            sketch_seed: input.sketch_seed,
            point_errors: Vec::new(),
            topk_error: Some(ek),
            normalizer,
            tail_norm_sq_k: Some(tail_norm_sq(&input.x, k)),
            tail_norm_sq_c: tail_norm_sq(&input.x, config.columns as usize),
        })
    })?;
    let errors: Vec<f64> = samples.iter().map(|s| s.topk_error.unwrap_or(0.0)).collect();
    let trimmed = trim_upper(&errors);
    let mean_error = mean(&trimmed);
    let scale = normalizer * (k as f64).sqrt();
    let normalized: Vec<f64> = errors.iter().map(|e| e / scale).collect();
    let relative: Vec<f64> = trimmed.iter().map(|e| e / mean_error).collect();
    Ok(TopKReport {
        config: *config,
        k,
        trials,
        normalizer,
        histogram: Histogram::standard(&normalized),
        mean_normalized: mean_error / scale,
        mean_error,
        relative_variance: variance(&relative),
        normalized,
        samples,
    })
}

/// Count-Sketch and Count-Min measured on identical signals, hash functions
/// and sampled coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub count_sketch: PointErrorReport,
    pub count_min: PointErrorReport,
    /// Mean Count-Min error over mean Count-Sketch error (far tails trimmed).
    pub mean_ratio: f64,
    /// 95% paired bootstrap interval for `mean_ratio`, resampling trials.
    pub ratio_ci: Interval,
}

pub const BOOTSTRAP_RESAMPLES: usize = 2000;

pub fn countmin_comparison(
    signal: &SignalSpec,
    config: &SketchConfig,
    trials: usize,
    policy: IndexPolicy,
) -> Result<ComparisonReport> {
    let count_sketch = point_error_experiment(signal, &config.with_kind(SketchKind::CountSketch), trials, policy)?;
    let count_min = point_error_experiment(signal, &config.with_kind(SketchKind::CountMin), trials, policy)?;

    // Both reports normalize by the same m_{R,C}, so ratios of normalized
    // means equal ratios of raw means.
    let cs_cut = quantile(&count_sketch.normalized, TRIM_QUANTILE);
    let cm_cut = quantile(&count_min.normalized, TRIM_QUANTILE);
    let units: Vec<PairedSums> = count_min
        .samples
        .iter()
        .zip(&count_sketch.samples)
        .map(|(cm, cs)| {
            let (num_sum, num_count) = trimmed_sum(&cm.point_errors, cm.normalizer, cm_cut);
            let (den_sum, den_count) = trimmed_sum(&cs.point_errors, cs.normalizer, cs_cut);
            PairedSums {
                num_sum,
                num_count,
                den_sum,
                den_count,
            }
        })
        .collect();
    let mean_ratio = ratio_of_means(&units);
    let ratio_ci = bootstrap_ratio_ci(
        &units,
        BOOTSTRAP_RESAMPLES,
        0.95,
        derive_seed(config.master_seed, STREAM_BOOTSTRAP, 0),
    );
    Ok(ComparisonReport {
        count_sketch,
        count_min,
        mean_ratio,
        ratio_ci,
    })
}

fn trimmed_sum(errors: &[f64], normalizer: f64, cut: f64) -> (f64, f64) {
    errors
        .iter()
        .map(|e| e / normalizer)
        .filter(|&v| v <= cut)
        .fold((0.0, 0.0), |(s, c), v| (s + v, c + 1.0))
}
