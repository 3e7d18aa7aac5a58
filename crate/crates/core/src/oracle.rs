//! Exponential-time brute-force references for tiny instances.
//!
//! Nothing here shares code with the production path it checks: the top-k
//! search enumerates candidate vectors and tests feasibility from the
//! definition, and the sketch law enumerates every hash and sign assignment.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceBudget {
    /// Cap on enumerated configurations.
    pub max_states: u64,
    /// Spacing of the grid swept for continuous searches.
    pub grid_step: f64,
    /// Whether the top-k search also tries `x_j` and `±m*` for each free
    /// coordinate, on top of the grid.
    pub clamp_candidates: bool,
}

impl Default for BruteForceBudget {
    fn default() -> Self {
        Self {
            max_states: 5_000_000,
            grid_step: 1e-3,
            clamp_candidates: true,
        }
    }
}

impl BruteForceBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_states == 0 {
            return Err(Error::input("max_states must be positive"));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::input("grid_step must be positive"));
        }
        Ok(())
    }
}

/// Full-sort median; even lengths average the two middle values.
pub fn oracle_median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::input("median of an empty list"));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median of NaN"));
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Index set of the `k` largest magnitudes, preferring members of `favored`
/// on ties, then smaller indices.
fn top_set(values: &[f64], k: usize, favored: &[bool]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap()
            .then(favored[b].cmp(&favored[a]))
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// `min ||x - x'||` over candidate vectors `x'` with the same top-k
/// restriction as `xhat`, found by exhaustive enumeration.
///
/// Coordinates in the top-k set `T` of `xhat` are pinned to `xhat`; each
/// other coordinate ranges over a grid on `[-m*, m*]` (plus the clamp
/// candidates when enabled), and every combination is checked against the
/// definition before its distance counts.
pub fn oracle_topk_error(x: &[f64], xhat: &[f64], k: usize, budget: &BruteForceBudget) -> Result<f64> {
    budget.validate()?;
    let n = x.len();
    if xhat.len() != n || k == 0 || k > n {
        return Err(Error::input("need equal lengths and 1 <= k <= n"));
    }
    let none = vec![false; n];
    let target = top_set(xhat, k, &none);
    let mut in_target = vec![false; n];
    for &i in &target {
        in_target[i] = true;
    }
    let threshold = target
        .iter()
        .map(|&i| xhat[i].abs())
        .fold(f64::INFINITY, f64::min);

    let free: Vec<usize> = (0..n).filter(|&j| !in_target[j]).collect();
    let steps = (2.0 * threshold / budget.grid_step).floor() as u64;
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(free.len());
    let mut states: u64 = 1;
    for &j in &free {
        let mut c: Vec<f64> = (0..=steps)
            .map(|s| -threshold + s as f64 * budget.grid_step)
            .collect();
        if budget.clamp_candidates {
            c.push(x[j]);
            c.push(threshold);
            c.push(-threshold);
        }
        states = states.saturating_mul(c.len() as u64);
        if states > budget.max_states {
            return Err(Error::OracleAbort(format!(
                "search space exceeds {} states",
                budget.max_states
            )));
        }
        candidates.push(c);
    }

    let mut trial = xhat.to_vec();
    let mut odometer = vec![0usize; free.len()];
    let mut best = f64::INFINITY;
    loop {
        for (slot, &j) in free.iter().enumerate() {
            trial[j] = candidates[slot][odometer[slot]];
        }
        if top_set(&trial, k, &in_target) == target {
            let d: f64 = x.iter().zip(&trial).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(d);
        }
        // advance
        let mut slot = 0;
        while slot < odometer.len() {
            odometer[slot] += 1;
            if odometer[slot] < candidates[slot].len() {
                break;
            }
            odometer[slot] = 0;
            slot += 1;
        }
        if slot == odometer.len() {
            break;
        }
    }
    Ok(best.sqrt())
}

/// Exact law of the Count-Sketch estimate of `x[item]` when every row draws
/// its hash and sign functions uniformly from all `C^n * 2^n` possibilities.
///
/// Returns `(value, probability)` pairs sorted by value.
pub fn oracle_sketch_distribution(
    x: &[f64],
    item: usize,
    rows: u32,
    columns: u32,
    budget: &BruteForceBudget,
) -> Result<Vec<(f64, f64)>> {
    budget.validate()?;
    let n = x.len();
    if n == 0 || item >= n || rows == 0 || columns == 0 {
        return Err(Error::input("need a nonempty vector, a valid item, and R, C >= 1"));
    }
    let per_row = (u64::from(columns))
        .checked_pow(n as u32)
        .and_then(|h| h.checked_mul(1u64 << n.min(63)))
        .filter(|&s| s.saturating_mul(u64::from(rows)) <= budget.max_states)
        .ok_or_else(|| Error::OracleAbort("per-row assignment space exceeds budget".into()))?;

    // Law of one row's sign-corrected cell value.
    let mut row_law: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    let c = u64::from(columns);
    let mut h = vec![0u64; n];
    for assignment in 0..per_row {
        let mut code = assignment;
        for hj in h.iter_mut() {
            *hj = code % c;
            code /= c;
        }
        let signs = code;
        let sign = |j: usize| if (signs >> j) & 1 == 0 { 1.0 } else { -1.0 };
        let mut cell = 0.0;
        for j in 0..n {
            if h[j] == h[item] {
                cell += sign(j) * x[j];
            }
        }
        let value = sign(item) * cell;
        row_law
            .entry(canonical_bits(value))
            .or_insert((value, 0))
            .1 += 1;
    }
    let support: Vec<(f64, f64)> = row_law
        .values()
        .map(|&(v, count)| (v, count as f64 / per_row as f64))
        .collect();

    let tuples = (support.len() as u64)
        .checked_pow(rows)
        .filter(|&t| t <= budget.max_states)
        .ok_or_else(|| Error::OracleAbort("row-tuple space exceeds budget".into()))?;

    let mut law: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    let s = support.len() as u64;
    let mut picks = vec![0.0; rows as usize];
    for tuple in 0..tuples {
        let mut code = tuple;
        let mut prob = 1.0;
        for p in picks.iter_mut() {
            let (v, q) = support[(code % s) as usize];
            *p = v;
            prob *= q;
            code /= s;
        }
        let med = oracle_median(&picks)?;
        law.entry(canonical_bits(med)).or_insert((med, 0.0)).1 += prob;
    }
    let mut out: Vec<(f64, f64)> = law.into_values().collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

/// Bit pattern with `-0.0` folded into `+0.0`.
fn canonical_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_reference() {
        assert_eq!(oracle_median(&[5.0]).unwrap(), 5.0);
        assert_eq!(oracle_median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert!(oracle_median(&[]).is_err());
    }

    #[test]
    fn topk_oracle_basics() {
        let b = BruteForceBudget {
            grid_step: 0.5,
            ..Default::default()
        };
        let x = [1.0, -2.0, 0.5];
        assert_eq!(oracle_topk_error(&x, &x, 2, &b).unwrap(), 0.0);
        assert_eq!(oracle_topk_error(&[5.0, 3.0, 1.0], &[5.0, 1.0, 3.0], 2, &b).unwrap(), 2.0);
        // k = n: nothing is free, the estimate itself is the only candidate.
        let d = oracle_topk_error(&[1.0, 2.0], &[1.5, 2.0], 2, &b).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn topk_oracle_aborts_over_budget() {
        let b = BruteForceBudget {
            max_states: 1000,
            grid_step: 1e-3,
            clamp_candidates: true,
        };
        let r = oracle_topk_error(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0], 1, &b);
        assert!(matches!(r, Err(Error::OracleAbort(_))));
    }

    #[test]
    fn sketch_law_single_coordinate() {
        let law = oracle_sketch_distribution(&[3.5], 0, 2, 3, &BruteForceBudget::default()).unwrap();
        assert_eq!(law, vec![(3.5, 1.0)]);
    }

    #[test]
    fn sketch_law_two_coordinates() {
        let law = oracle_sketch_distribution(&[2.0, 1.0], 0, 1, 2, &BruteForceBudget::default()).unwrap();
        assert_eq!(law.len(), 3);
        let prob_of = |v: f64| law.iter().find(|(x, _)| *x == v).map(|p| p.1).unwrap();
        assert!((prob_of(2.0) - 0.5).abs() < 1e-15);
        assert!((prob_of(1.0) - 0.25).abs() < 1e-15);
        assert!((prob_of(3.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sketch_error_law_is_symmetric() {
        let x = [1.0, 0.5, -0.25];
        let law = oracle_sketch_distribution(&x, 0, 3, 2, &BruteForceBudget::default()).unwrap();
        let total: f64 = law.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for &(v, p) in &law {
            let mirror = 2.0 * x[0] - v;
            let q = law
                .iter()
                .find(|(w, _)| (w - mirror).abs() < 1e-12)
                .map(|p| p.1)
                .unwrap_or(0.0);
            assert!((p - q).abs() < 1e-12, "value {v}: {p} vs {q}");
        }
    }
}
