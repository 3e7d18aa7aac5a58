//! Numerical checks of the probability lemmas behind the sketch analysis,
//! independent of any sketch: small-ball bounds for symmetric sums, the
//! median Chernoff bound, median geometry for vectors, and the identity
//! `median over partitions of (median of block medians) = median`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::median;
use crate::hashing::derive_seed;

const STREAM_SMALL_BALL: u64 = 0x5ba1;
const STREAM_MEDIAN_TAIL: u64 = 0x3ed1;
const STREAM_VECTOR: u64 = 0x7ec7;

/// Monte-Carlo work is split into fixed-size chunks with their own derived
/// seeds, so results do not depend on the thread count.
const CHUNK: usize = 4096;

/// Joint support size up to which sums are enumerated exactly.
pub const EXACT_SUPPORT_LIMIT: u64 = 531_441; // 3^12

/// Normal quantile used for reported half-widths.
const Z95: f64 = 1.959_963_984_540_054;

/// One summand: `0` with probability `zero_probability`, otherwise
/// `±magnitude` with equal chance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricTerm {
    pub magnitude: f64,
    pub zero_probability: f64,
}

/// `X = sum_i X_i` for independent symmetric terms with `Pr[X_i = 0] >= 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSumSpec {
    pub terms: Vec<SymmetricTerm>,
}

impl SymmetricSumSpec {
    pub fn new(terms: Vec<SymmetricTerm>) -> Result<Self> {
        let spec = Self { terms };
        spec.validate()?;
        Ok(spec)
    }

    /// `n` copies of one term.
    pub fn iid(n: usize, magnitude: f64, zero_probability: f64) -> Result<Self> {
        Self::new(vec![
            SymmetricTerm {
                magnitude,
                zero_probability
            };
            n
        ])
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::input("a sum needs at least one term"));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !t.magnitude.is_finite() {
                return Err(Error::input(format!("term {i}: magnitude must be finite")));
            }
            if !(0.5..=1.0).contains(&t.zero_probability) {
                return Err(Error::input(format!(
                    "term {i}: zero probability {} is outside [1/2, 1]",
                    t.zero_probability
                )));
            }
        }
        Ok(())
    }

    /// `sigma^2 = sum_i (1 - p_i) m_i^2`.
    pub fn variance(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| (1.0 - t.zero_probability) * t.magnitude * t.magnitude)
            .sum()
    }

    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Number of points in the joint support, `3^n` (saturating).
    pub fn joint_support(&self) -> u64 {
        (0..self.terms.len()).fold(1u64, |acc, _| acc.saturating_mul(3))
    }

    fn nondegenerate_sigma(&self) -> Result<f64> {
        self.validate()?;
        let sigma = self.sigma();
        if sigma == 0.0 {
            return Err(Error::Degenerate("the sum is identically zero (sigma = 0)".into()));
        }
        Ok(sigma)
    }
}

/// How to evaluate an expectation over a [`SymmetricSumSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    /// Enumerate when the joint support is at most `3^12` points, otherwise
    /// sample.
    Auto { trials: usize, seed: u64 },
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

/// A probability or expectation with its 95% half-width (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
    pub exact: bool,
}

/// The law of `|X| / sigma`, either as weighted atoms or as samples.
enum Law {
    Atoms(Vec<(f64, f64)>),
    Samples(Vec<f64>),
}

impl Law {
    fn expect(&self, f: impl Fn(f64) -> f64) -> Estimate {
        match self {
            Law::Atoms(atoms) => Estimate {
                value: atoms.iter().map(|&(v, w)| w * f(v)).sum(),
                half_width: 0.0,
                exact: true,
            },
            Law::Samples(s) => {
                let n = s.len() as f64;
                let (mut sum, mut sq) = (0.0, 0.0);
                for &v in s {
                    let y = f(v);
                    sum += y;
                    sq += y * y;
                }
                let m = sum / n;
                let var = if s.len() > 1 {
                    ((sq - n * m * m) / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                Estimate {
                    value: m,
                    half_width: Z95 * (var / n).sqrt(),
                    exact: false,
                }
            }
        }
    }
}

fn normalized_law(spec: &SymmetricSumSpec, eval: Evaluation) -> Result<Law> {
    let sigma = spec.nondegenerate_sigma()?;
    let (exact, trials, seed) = match eval {
        Evaluation::Exact => {
            if spec.joint_support() > EXACT_SUPPORT_LIMIT {
                return Err(Error::Unsupported(format!(
                    "exact enumeration of 3^{} points exceeds the 3^12 limit",
                    spec.len()
                )));
            }
            (true, 0, 0)
        }
        Evaluation::Auto { trials, seed } => (spec.joint_support() <= EXACT_SUPPORT_LIMIT, trials, seed),
        Evaluation::MonteCarlo { trials, seed } => (false, trials, seed),
    };
    if exact {
        return Ok(Law::Atoms(enumerate(spec, sigma)));
    }
    if trials == 0 {
        return Err(Error::input("Monte-Carlo evaluation needs at least one trial"));
    }
    Ok(Law::Samples(sample(spec, sigma, trials, seed)))
}

/// Walks all `3^n` sign/zero patterns.
fn enumerate(spec: &SymmetricSumSpec, sigma: f64) -> Vec<(f64, f64)> {
    let n = spec.len();
    let mut atoms = Vec::with_capacity(spec.joint_support() as usize);
    let mut digits = vec![0u8; n];
    loop {
        let mut sum = 0.0;
        let mut w = 1.0;
        for (t, &d) in spec.terms.iter().zip(&digits) {
            match d {
                0 => w *= t.zero_probability,
                1 => {
                    sum += t.magnitude;
                    w *= 0.5 * (1.0 - t.zero_probability);
                }
                _ => {
                    sum -= t.magnitude;
                    w *= 0.5 * (1.0 - t.zero_probability);
                }
            }
        }
        if w > 0.0 {
            atoms.push((sum.abs() / sigma, w));
        }
        let mut i = 0;
        while i < n {
            digits[i] += 1;
            if digits[i] < 3 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == n {
            return atoms;
        }
    }
}

fn sample(spec: &SymmetricSumSpec, sigma: f64, trials: usize, seed: u64) -> Vec<f64> {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SMALL_BALL, c as u64));
            let len = CHUNK.min(trials - c * CHUNK);
            (0..len)
                .map(|_| {
                    let mut sum = 0.0;
                    for t in &spec.terms {
                        let u: f64 = rng.random();
                        if u >= t.zero_probability {
                            sum += if rng.random::<bool>() { t.magnitude } else { -t.magnitude };
                        }
                    }
                    sum.abs() / sigma
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::input(format!("epsilon {eps} is outside (0, 1]")));
    }
    Ok(())
}

fn triangle(eps: f64, v: f64) -> f64 {
    (1.0 - v / eps).max(0.0)
}

/// `Pr[|X| < eps * sigma]`.
pub fn small_ball_probability(spec: &SymmetricSumSpec, eps: f64, eval: Evaluation) -> Result<Estimate> {
    check_eps(eps)?;
    let law = normalized_law(spec, eval)?;
    Ok(law.expect(|v| if v < eps { 1.0 } else { 0.0 }))
}

/// `E[T_eps(X / sigma)]` with the tent `T_eps(y) = max(0, 1 - |y| / eps)`,
/// which lower-bounds the small-ball probability.
pub fn triangle_filter_expectation(spec: &SymmetricSumSpec, eps: f64, eval: Evaluation) -> Result<Estimate> {
    check_eps(eps)?;
    let law = normalized_law(spec, eval)?;
    Ok(law.expect(|v| triangle(eps, v)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallBallPoint {
    pub eps: f64,
    pub small_ball: Estimate,
    pub triangle: Estimate,
}

impl SmallBallPoint {
    /// Empirical constant `Pr[|X| < eps sigma] / eps`.
    pub fn ratio(&self) -> f64 {
        self.small_ball.value / self.eps
    }
}

/// Both quantities over an epsilon grid, evaluated on one shared law so the
/// curve is monotone in `eps` even when sampled.
pub fn small_ball_curve(spec: &SymmetricSumSpec, eps_grid: &[f64], eval: Evaluation) -> Result<Vec<SmallBallPoint>> {
    for &e in eps_grid {
        check_eps(e)?;
    }
    let law = normalized_law(spec, eval)?;
    Ok(eps_grid
        .iter()
        .map(|&eps| SmallBallPoint {
            eps,
            small_ball: law.expect(|v| if v < eps { 1.0 } else { 0.0 }),
            triangle: law.expect(|v| triangle(eps, v)),
        })
        .collect())
}

/// `{0.05, 0.10, ..., 1.00}`.
pub fn standard_eps_grid() -> Vec<f64> {
    (1..=20).map(|i| f64::from(i) * 0.05).collect()
}

/// Five sums used as the standard small-ball battery: a single term, many
/// equal terms, spread magnitudes, a geometric sequence with mixed zero
/// probabilities, and a long harmonic sum.
pub fn reference_specs() -> Vec<(&'static str, SymmetricSumSpec)> {
    let term = |magnitude, zero_probability| SymmetricTerm {
        magnitude,
        zero_probability,
    };
    let build = |terms: Vec<SymmetricTerm>| SymmetricSumSpec::new(terms).expect("valid reference spec");
    vec![
        ("single unit term", build(vec![term(1.0, 0.5)])),
        ("20 unit terms", build(vec![term(1.0, 0.5); 20])),
        ("magnitudes 1..12", build((1..=12).map(|i| term(f64::from(i), 0.5)).collect())),
        (
            "geometric magnitudes, mixed p",
            build(
                (0..10)
                    .map(|i| term(0.5f64.powi(i), if i % 2 == 0 { 0.5 } else { 0.9 }))
                    .collect(),
            ),
        ),
        (
            "40 harmonic terms, p in [0.5, 0.95]",
            build(
                (0..40)
                    .map(|i| term(1.0 / f64::from(i + 1), 0.5 + 0.225 * f64::from(i % 3)))
                    .collect(),
            ),
        ),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianTail {
    pub p: f64,
    pub t: usize,
    pub trials: usize,
    pub hits: u64,
    pub frequency: f64,
    /// Binomial standard error of `frequency`.
    pub std_error: f64,
    /// `2 exp(-t p^2 / 2)`.
    pub bound: f64,
}

impl MedianTail {
    /// Whether the frequency sits below the bound plus `sigmas` standard
    /// errors.
    pub fn within_bound(&self, sigmas: f64) -> bool {
        self.frequency <= self.bound + sigmas * self.std_error
    }
}

/// Overshoot factor for the atoms placed outside the ball.
const OUTSIDE_OFFSET: f64 = 0.25;

/// Frequency of `|median(X_1..X_t)| >= 1` for independent symmetric `X_i`
/// with `Pr[|X_i| < 1] = p`: inside the ball `X_i` is uniform on `(-1, 1)`,
/// otherwise it is `±(1 + delta)`.
pub fn median_tail_probability(p: f64, t: usize, trials: usize, seed: u64) -> Result<MedianTail> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::input(format!("p = {p} is outside (0, 1]")));
    }
    if t == 0 || trials == 0 {
        return Err(Error::input("t and trials must be at least 1"));
    }
    let chunks = trials.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_MEDIAN_TAIL, c as u64));
            let mut xs = vec![0.0; t];
            let mut hits = 0u64;
            for _ in 0..CHUNK.min(trials - c * CHUNK) {
                for x in xs.iter_mut() {
                    let inside = p >= 1.0 || rng.random::<f64>() < p;
                    *x = if inside {
                        // (-1, 1), open at both ends
                        loop {
                            let u = rng.random_range(-1.0..1.0);
                            if u != -1.0 {
                                break u;
                            }
                        }
                    } else if rng.random::<bool>() {
                        1.0 + OUTSIDE_OFFSET
                    } else {
                        -(1.0 + OUTSIDE_OFFSET)
                    };
                }
                if median(&mut xs).abs() >= 1.0 {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let f = hits as f64 / trials as f64;
    Ok(MedianTail {
        p,
        t,
        trials,
        hits,
        frequency: f,
        std_error: (f * (1.0 - f) / trials as f64).sqrt(),
        bound: 2.0 * (-(t as f64) * p * p / 2.0).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorMedianOutcome {
    /// Inputs with norm strictly below the bound.
    pub good: usize,
    pub vectors: usize,
    /// At least `ceil(3r/4)` inputs are good.
    pub premise: bool,
    /// `||median|| / C`.
    pub ratio: f64,
    /// False only if the premise holds and `ratio >= sqrt(3)`.
    pub passed: bool,
}

/// Coordinate-wise median of `r` vectors (even `r` averages the middle pair)
/// checked against the `sqrt(3)` norm bound.
pub fn vector_median_check(vectors: &[Vec<f64>], c_bound: f64) -> Result<VectorMedianOutcome> {
    let first = vectors.first().ok_or_else(|| Error::input("need at least one vector"))?;
    let dim = first.len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::input("vectors differ in length"));
    }
    if !(c_bound > 0.0 && c_bound.is_finite()) {
        return Err(Error::input("the norm bound must be positive and finite"));
    }
    let r = vectors.len();
    let good = vectors.iter().filter(|v| norm(v) < c_bound).count();
    let mut column = vec![0.0; r];
    let med: Vec<f64> = (0..dim)
        .map(|j| {
            for (c, v) in column.iter_mut().zip(vectors) {
                *c = v[j];
            }
            median(&mut column)
        })
        .collect();
    let ratio = norm(&med) / c_bound;
    let premise = 4 * good >= 3 * r;
    Ok(VectorMedianOutcome {
        good,
        vectors: r,
        premise,
        ratio,
        passed: !premise || ratio < 3f64.sqrt(),
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorMedianStress {
    pub ensembles: usize,
    pub violations: usize,
    pub max_ratio: f64,
}

/// Random ensembles (`r <= 9` vectors of dimension `n <= 8`, bound 1) that
/// satisfy the 3/4 premise. Good vectors are drawn near the unit sphere and
/// often along coordinate axes, which is where the bound is tightest; the
/// bad vectors are large and often aligned.
pub fn vector_median_stress(ensembles: usize, seed: u64) -> Result<VectorMedianStress> {
    let chunks = ensembles.div_ceil(CHUNK);
    let parts: Vec<(usize, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_VECTOR, c as u64));
            let mut violations = 0;
            let mut max_ratio: f64 = 0.0;
            for _ in 0..CHUNK.min(ensembles - c * CHUNK) {
                let vectors = stress_ensemble(&mut rng);
                let out = vector_median_check(&vectors, 1.0).expect("well-formed ensemble");
                debug_assert!(out.premise);
                if !out.passed {
                    violations += 1;
                }
                max_ratio = max_ratio.max(out.ratio);
            }
            (violations, max_ratio)
        })
        .collect();
    Ok(VectorMedianStress {
        ensembles,
        violations: parts.iter().map(|p| p.0).sum(),
        max_ratio: parts.iter().map(|p| p.1).fold(0.0, f64::max),
    })
}

fn stress_ensemble(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let r = rng.random_range(1..=9usize);
    let dim = rng.random_range(1..=8usize);
    let min_good = (3 * r).div_ceil(4);
    let good = rng.random_range(min_good..=r);
    let axis_mode = rng.random::<bool>();
    let mut out = Vec::with_capacity(r);
    for i in 0..good {
        let mut v: Vec<f64> = if axis_mode {
            let mut v = vec![0.0; dim];
            v[i % dim] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            v
        } else {
            (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let len = norm(&v);
        let target = 1.0 - rng.random::<f64>().powi(4) * 0.999_999;
        let scale = if len > 0.0 { target / len } else { 0.0 };
        let scale = scale.min((1.0 - 1e-12) / len.max(f64::MIN_POSITIVE));
        v.iter_mut().for_each(|x| *x *= scale);
        out.push(v);
    }
    let direction: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    for _ in good..r {
        let size = 10f64.powf(rng.random_range(0.0..3.0));
        let v = if rng.random::<bool>() {
            direction.iter().map(|d| d * size).collect()
        } else {
            (0..dim).map(|_| rng.random_range(-size..size)).collect()
        };
        out.push(v);
    }
    out
}

/// Number of unordered partitions of `k * l` items into `l` blocks of size
/// `k`: `(kl)! / ((k!)^l l!)`.
pub fn partition_count(k: usize, l: usize) -> u128 {
    let mut count: u128 = 1;
    // Place blocks one at a time, each led by the smallest remaining item:
    // the product of C(remaining - 1, k - 1).
    let mut remaining = k * l;
    for _ in 0..l {
        count *= binomial(remaining - 1, k - 1);
        remaining -= k;
    }
    count
}

fn binomial(n: usize, r: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Largest enumeration `median_cubed_check` will attempt.
pub const MAX_PARTITIONS: u128 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianCubed {
    pub partitions: u64,
    /// Median over all partitions of the median of block medians.
    pub lhs: f64,
    /// Plain median.
    pub rhs: f64,
    pub equal: bool,
}

/// Enumerates every partition of `values` into `l` blocks of size `k` and
/// compares the triple median with the plain median, exactly.
///
/// Blocks are listed canonically (each led by its smallest unused element)
/// so each unordered partition appears once. Only ranks matter, so the
/// enumeration counts how often each rank comes out as the median of block
/// medians and reads the outer median off those counts.
pub fn median_cubed_check(values: &[f64], k: usize, l: usize) -> Result<MedianCubed> {
    let n = values.len();
    if k == 0 || l == 0 || k * l != n {
        return Err(Error::input(format!("k * l = {} does not match n = {n}", k * l)));
    }
    if n % 2 == 0 {
        return Err(Error::input("the list length must be odd"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("values must be finite"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::input("values must be distinct"));
    }
    if n > 32 || partition_count(k, l) > MAX_PARTITIONS {
        return Err(Error::Unsupported(format!(
            "{} partitions exceed the enumeration limit",
            partition_count(k, l)
        )));
    }
    // Work with ranks; rank r holds sorted[r].
    let mut search = PartitionSearch {
        n,
        k,
        counts: vec![0; n],
        stack: Vec::with_capacity(n),
        block_medians: Vec::with_capacity(l),
        scratch: Vec::with_capacity(l),
    };
    search.next_block(0);
    let total: u64 = search.counts.iter().sum();
    let lhs = median_from_counts(&search.counts, total, &sorted);
    let rhs = sorted[n / 2];
    Ok(MedianCubed {
        partitions: total,
        lhs,
        rhs,
        equal: lhs == rhs,
    })
}

struct PartitionSearch {
    n: usize,
    k: usize,
    counts: Vec<u64>,
    /// Members of the blocks placed so far, block after block.
    stack: Vec<u8>,
    block_medians: Vec<u8>,
    scratch: Vec<u8>,
}

impl PartitionSearch {
    fn next_block(&mut self, used: u32) {
        let full = if self.n == 32 { u32::MAX } else { (1u32 << self.n) - 1 };
        if used == full {
            self.scratch.clear();
            self.scratch.extend_from_slice(&self.block_medians);
            self.scratch.sort_unstable();
            let m = self.scratch[self.scratch.len() / 2];
            self.counts[m as usize] += 1;
            return;
        }
        let leader = (!used).trailing_zeros() as u8;
        let start = self.stack.len();
        self.stack.push(leader);
        self.fill_block(used | (1 << leader), leader + 1, start);
        self.stack.pop();
    }

    fn fill_block(&mut self, used: u32, from: u8, start: usize) {
        let have = self.stack.len() - start;
        if have == self.k {
            // Members are pushed in increasing rank order.
            self.block_medians.push(self.stack[start + self.k / 2]);
            self.next_block(used);
            self.block_medians.pop();
            return;
        }
        let need = (self.k - have) as u32;
        for e in from..self.n as u8 {
            if used & (1 << e) != 0 {
                continue;
            }
            // Not enough free items from `e` upward to finish the block.
            if ((!used) >> e).count_ones() - (32 - self.n as u32) < need {
                break;
            }
            self.stack.push(e);
            self.fill_block(used | (1 << e), e + 1, start);
            self.stack.pop();
        }
    }
}

/// Median of the multiset where rank `r` occurs `counts[r]` times; for an
/// even total the two middle values are averaged.
fn median_from_counts(counts: &[u64], total: u64, sorted: &[f64]) -> f64 {
    let at = |pos: u64| {
        let mut seen = 0;
        for (r, &c) in counts.iter().enumerate() {
            seen += c;
            if pos < seen {
                return sorted[r];
            }
        }
        unreachable!("position beyond the multiset")
    };
    if total % 2 == 1 {
        at(total / 2)
    } else {
        0.5 * (at(total / 2 - 1) + at(total / 2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term_small_ball() {
        let spec = SymmetricSumSpec::iid(1, 1.0, 0.5).unwrap();
        assert!((spec.sigma() - 0.5f64.sqrt()).abs() < 1e-15);
        let est = small_ball_probability(&spec, 0.5, Evaluation::Exact).unwrap();
        assert!(est.exact);
        assert_eq!(est.value, 0.5);
        // The full ball still excludes |X| = 1 > sigma.
        let est = small_ball_probability(&spec, 1.0, Evaluation::Exact).unwrap();
        assert_eq!(est.value, 0.5);
    }

    #[test]
    fn degenerate_and_invalid_specs() {
        let zero = SymmetricSumSpec::iid(3, 2.0, 1.0).unwrap();
        assert!(matches!(
            small_ball_probability(&zero, 0.5, Evaluation::Exact),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            triangle_filter_expectation(&zero, 0.5, Evaluation::Exact),
            Err(Error::Degenerate(_))
        ));
        assert!(SymmetricSumSpec::iid(2, 1.0, 0.4).is_err());
        assert!(SymmetricSumSpec::iid(2, f64::NAN, 0.5).is_err());
        let ok = SymmetricSumSpec::iid(2, 1.0, 0.5).unwrap();
        assert!(small_ball_probability(&ok, 0.0, Evaluation::Exact).is_err());
        assert!(small_ball_probability(&ok, 1.5, Evaluation::Exact).is_err());
        let big = SymmetricSumSpec::iid(13, 1.0, 0.5).unwrap();
        assert!(matches!(
            small_ball_probability(&big, 0.5, Evaluation::Exact),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn exact_matches_binomial_law() {
        // Each term is B1 + B2 - 1 for fair bits, so the sum of 12 is
        // Bin(24, 1/2) - 12 and Pr[X = 0] = C(24, 12) / 2^24.
        let spec = SymmetricSumSpec::iid(12, 1.0, 0.5).unwrap();
        let eps = 0.9 / spec.sigma();
        let est = small_ball_probability(&spec, eps, Evaluation::Exact).unwrap();
        let expected = 2_704_156.0 / 16_777_216.0;
        assert!((est.value - expected).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let spec = SymmetricSumSpec::new(vec![
            SymmetricTerm { magnitude: 1.0, zero_probability: 0.5 },
            SymmetricTerm { magnitude: 2.5, zero_probability: 0.7 },
            SymmetricTerm { magnitude: 0.3, zero_probability: 0.5 },
            SymmetricTerm { magnitude: 1.7, zero_probability: 0.9 },
        ])
        .unwrap();
        let mc = Evaluation::MonteCarlo { trials: 200_000, seed: 3 };
        for eps in [0.1, 0.4, 0.8] {
            let e = small_ball_probability(&spec, eps, Evaluation::Exact).unwrap();
            let m = small_ball_probability(&spec, eps, mc).unwrap();
            assert!((e.value - m.value).abs() < 3.0 * m.half_width.max(1e-3), "eps {eps}");
            let te = triangle_filter_expectation(&spec, eps, Evaluation::Exact).unwrap();
            let tm = triangle_filter_expectation(&spec, eps, mc).unwrap();
            assert!((te.value - tm.value).abs() < 3.0 * tm.half_width.max(1e-3));
        }
    }

    #[test]
    fn curve_is_monotone_and_dominates_triangle() {
        let spec = SymmetricSumSpec::iid(20, 1.0, 0.5).unwrap();
        let curve = small_ball_curve(
            &spec,
            &standard_eps_grid(),
            Evaluation::Auto { trials: 50_000, seed: 9 },
        )
        .unwrap();
        assert!(!curve[0].small_ball.exact);
        for w in curve.windows(2) {
            assert!(w[1].small_ball.value >= w[0].small_ball.value);
            assert!(w[1].triangle.value >= w[0].triangle.value);
        }
        for p in &curve {
            // Same samples: the tent is pointwise below the indicator.
            assert!(p.triangle.value <= p.small_ball.value);
            assert!(p.small_ball.value >= p.eps / 7.0);
        }
    }

    #[test]
    fn median_tail_edge_cases() {
        let all_inside = median_tail_probability(1.0, 15, 10_000, 1).unwrap();
        assert_eq!(all_inside.hits, 0);
        let single = median_tail_probability(0.5, 1, 200_000, 2).unwrap();
        assert!((single.frequency - 0.5).abs() < 0.005);
        assert!((single.bound - 2.0 * (-0.125f64).exp()).abs() < 1e-15);
        assert!(single.within_bound(3.0));
        assert!(median_tail_probability(0.0, 3, 10, 1).is_err());
        assert!(median_tail_probability(0.5, 0, 10, 1).is_err());
    }

    #[test]
    fn median_tail_is_seed_deterministic() {
        let a = median_tail_probability(0.3, 25, 20_000, 5).unwrap();
        let b = median_tail_probability(0.3, 25, 20_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.within_bound(3.0));
    }

    #[test]
    fn vector_median_examples() {
        let v = vec![0.3, -0.4, 0.1];
        let same = vec![v.clone(); 5];
        let out = vector_median_check(&same, 1.0).unwrap();
        assert!((out.ratio - norm(&v)).abs() < 1e-15);
        assert!(out.passed);

        let mut outlier = vec![vec![0.0; 3]; 3];
        outlier.push(vec![1e9, -1e9, 1e9]);
        let out = vector_median_check(&outlier, 1.0).unwrap();
        assert!(out.premise);
        assert_eq!(out.ratio, 0.0);

        assert!(vector_median_check(&[vec![1.0], vec![1.0, 2.0]], 1.0).is_err());
        assert!(vector_median_check(&[], 1.0).is_err());
    }

    #[test]
    fn vector_median_bound_is_nearly_tight() {
        // Three axis vectors just inside the unit ball and their median.
        let a = 1.0 - 1e-9;
        let vs = vec![vec![a, 0.0, 0.0], vec![0.0, a, 0.0], vec![0.0, 0.0, a], vec![a, a, a]];
        let out = vector_median_check(&vs, 1.0).unwrap();
        assert!(out.premise && out.passed);
        assert!(out.ratio > 0.85);
    }

    #[test]
    fn vector_median_stress_small() {
        let s = vector_median_stress(5_000, 11).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.max_ratio < 3f64.sqrt());
    }

    #[test]
    fn partition_counts() {
        assert_eq!(partition_count(3, 3), 280);
        assert_eq!(partition_count(3, 5), 1_401_400);
        assert_eq!(partition_count(5, 3), 126_126);
        assert_eq!(partition_count(1, 1), 1);
        assert_eq!(partition_count(1, 7), 1);
    }

    #[test]
    fn median_cubed_examples() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        let out = median_cubed_check(&v, 3, 3).unwrap();
        assert_eq!(out.partitions, 280);
        assert_eq!(out.lhs, 5.0);
        assert_eq!(out.rhs, 5.0);
        assert!(out.equal);

        let single = median_cubed_check(&[2.5], 1, 1).unwrap();
        assert_eq!((single.lhs, single.partitions), (2.5, 1));

        let v: Vec<f64> = [3.2, -1.0, 7.5, 0.25, 9.0, -4.0, 1.5].to_vec();
        let out = median_cubed_check(&v, 7, 1).unwrap();
        assert!(out.equal && out.partitions == 1);
        let out = median_cubed_check(&v, 1, 7).unwrap();
        assert!(out.equal && out.partitions == 1);
    }

    #[test]
    fn median_cubed_rejects_bad_shapes() {
        let v: Vec<f64> = (0..8).map(f64::from).collect();
        assert!(median_cubed_check(&v, 2, 4).is_err());
        assert!(median_cubed_check(&v[..6], 3, 3).is_err());
        assert!(median_cubed_check(&[1.0, 1.0, 2.0], 3, 1).is_err());
    }
}
