//! Summary statistics shared by the experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn stddev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Linear-interpolation quantile of already sorted data, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

/// Quantile above which samples are treated as the discarded far tail.
pub const TRIM_QUANTILE: f64 = 0.999;

/// The samples at or below the 99.9th percentile, in their original order.
pub fn trim_upper(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let cut = quantile(xs, TRIM_QUANTILE);
    xs.iter().copied().filter(|&x| x <= cut).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub count: u64,
    /// `count / (total samples * width)`.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<Bin>,
    pub total: u64,
    /// Samples beyond the last bin edge.
    pub overflow: u64,
}

pub const HISTOGRAM_BINS: usize = 60;
pub const HISTOGRAM_UPPER_QUANTILE: f64 = 0.995;

impl Histogram {
    /// Uniform bins over `[0, upper]`; the last bin is closed on the right.
    pub fn with_range(samples: &[f64], bins: usize, upper: f64) -> Self {
        let bins = bins.max(1);
        let upper = if upper > 0.0 && upper.is_finite() { upper } else { 1.0 };
        let width = upper / bins as f64;
        let mut counts = vec![0u64; bins];
        let mut overflow = 0;
        for &s in samples {
            if s < 0.0 || s > upper {
                overflow += 1;
                continue;
            }
            let b = ((s / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let total = samples.len() as u64;
        let norm = (total.max(1)) as f64 * width;
        let bins = counts
            .into_iter()
            .enumerate()
            .map(|(b, count)| Bin {
                left: b as f64 * width,
                right: (b + 1) as f64 * width,
                count,
                density: count as f64 / norm,
            })
            .collect();
        Self {
            bins,
            total,
            overflow,
        }
    }

    /// 60 bins over `[0, 99.5th percentile]` of nonnegative samples.
    pub fn standard(samples: &[f64]) -> Self {
        let upper = if samples.is_empty() {
            1.0
        } else {
            quantile(samples, HISTOGRAM_UPPER_QUANTILE)
        };
        Self::with_range(samples, HISTOGRAM_BINS, upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Unweighted least squares `y = slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
        points: xs.len(),
    })
}

/// Least squares for `y = c * x` through the origin, with the coefficient of
/// determination about the mean of `y`.
pub fn fit_proportional(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.is_empty() {
        return None;
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return None;
    }
    let c = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / sxx;
    let my = mean(ys);
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some((c, r2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// One resampling unit for [`bootstrap_ratio_ci`]: sums and sample counts of
/// two paired quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedSums {
    pub num_sum: f64,
    pub num_count: f64,
    pub den_sum: f64,
    pub den_count: f64,
}

/// Ratio of the pooled means `mean(num) / mean(den)`.
pub fn ratio_of_means(units: &[PairedSums]) -> f64 {
    let (mut a, mut na, mut b, mut nb) = (0.0, 0.0, 0.0, 0.0);
    for u in units {
        a += u.num_sum;
        na += u.num_count;
        b += u.den_sum;
        nb += u.den_count;
    }
    (a / na) / (b / nb)
}

/// Percentile bootstrap of [`ratio_of_means`], resampling whole units with
/// replacement. Returns the central `level` interval.
pub fn bootstrap_ratio_ci(units: &[PairedSums], resamples: usize, level: f64, seed: u64) -> Interval {
    assert!(!units.is_empty());
    let n = units.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = Vec::with_capacity(n);
    let mut ratios: Vec<f64> = (0..resamples.max(1))
        .map(|_| {
            draw.clear();
            draw.extend((0..n).map(|_| units[rng.random_range(0..n)]));
            ratio_of_means(&draw)
        })
        .collect();
    ratios.sort_unstable_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Interval {
        lower: quantile_sorted(&ratios, tail),
        upper: quantile_sorted(&ratios, 1.0 - tail),
    }
}
