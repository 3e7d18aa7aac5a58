//! Error functionals for sketch estimates and the Monte-Carlo experiments that
//! measure them.

mod experiment;

pub use experiment::*;

use crate::error::{Error, Result};
use crate::estimators::top_k_indices;

/// Empirical point-error normalizer `m_{R,C} = R^(-1/2) * C^(-4/5)`.
pub fn m_value(rows: u32, columns: u32) -> f64 {
    f64::from(rows).powf(-0.5) * f64::from(columns).powf(-0.8)
}

/// Top-k estimation error ("distance to validity"): the distance from `x` to
/// the nearest `x'` whose top-k restriction equals that of `xhat`.
///
/// With `T` the top-k index set of `xhat` and `m* = min_{i in T} |xhat_i|`,
/// the nearest such `x'` copies `xhat` on `T` and clamps every other
/// coordinate of `x` into `[-m*, m*]`. Coordinates at exactly `m*` are taken
/// as not displacing `T`.
pub fn topk_error(x: &[f64], xhat: &[f64], k: usize) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::input(format!(
            "length mismatch: x has {}, estimate has {}",
            x.len(),
            xhat.len()
        )));
    }
    let top = top_k_indices(xhat, k)?;
    let threshold = xhat[*top.last().expect("k >= 1")].abs();
    let mut selected = vec![false; x.len()];
    let mut total = 0.0;
    for &i in &top {
        selected[i] = true;
        let d = x[i] - xhat[i];
        total += d * d;
    }
    for (j, &xj) in x.iter().enumerate() {
        if !selected[j] {
            let excess = xj.abs() - threshold;
            if excess > 0.0 {
                total += excess * excess;
            }
        }
    }
    Ok(total.sqrt())
}

/// Absolute errors `|xhat_i - x_i|` at the given indices.
pub fn point_errors(x: &[f64], xhat: &[f64], indices: &[usize]) -> Vec<f64> {
    indices.iter().map(|&i| (xhat[i] - x[i]).abs()).collect()
}

/// One trial's measurements, with the normalizers they are judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSample {
    pub trial: u64,
    pub signal_seed: u64,
    pub sketch_seed: u64,
    pub point_errors: Vec<f64>,
    pub topk_error: Option<f64>,
    /// `m_{R,C}`.
    pub normalizer: f64,
    /// `||x_tail(k)||^2` when a `k` applies to the trial.
    pub tail_norm_sq_k: Option<f64>,
    /// `||x_tail(C)||^2`.
    pub tail_norm_sq_c: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{oracle_topk_error, BruteForceBudget};

    #[test]
    fn m_value_examples() {
        assert_eq!(m_value(1, 1), 1.0);
        // 26^(-1/2) * 100^(-4/5) at 30 digits: 4.92621458853703560954e-3
        assert!((m_value(26, 100) - 4.926_214_588_537_036e-3).abs() < 1e-17);
        for r in 1..40 {
            assert!(m_value(r + 1, 100) < m_value(r, 100));
            assert!(m_value(26, r + 1) < m_value(26, r));
        }
    }

    #[test]
    fn exact_estimate_has_zero_error() {
        let x = [0.3, -2.0, 1.1, 0.0, 5.5];
        for k in 1..=5 {
            assert_eq!(topk_error(&x, &x, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn worked_instance() {
        let x = [5.0, 3.0, 1.0];
        let xhat = [5.0, 1.0, 3.0];
        assert_eq!(topk_error(&x, &xhat, 2).unwrap(), 2.0);
        let budget = BruteForceBudget::default();
        assert_eq!(oracle_topk_error(&x, &xhat, 2, &budget).unwrap(), 2.0);
    }

    #[test]
    fn exaggerated_head_costs_delta() {
        let x = [0.5, 4.0, -1.0, 2.0];
        let mut xhat = x;
        xhat[1] += 0.75;
        assert!((topk_error(&x, &xhat, 1).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn errors_on_bad_input() {
        assert!(topk_error(&[1.0], &[1.0, 2.0], 1).is_err());
        assert!(topk_error(&[1.0, 2.0], &[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn scale_and_permutation() {
        let x = [1.0, -3.0, 2.5, 0.2, -0.7, 4.0];
        let xhat = [1.3, -2.1, 2.9, -0.4, -0.9, 3.2];
        let base = topk_error(&x, &xhat, 3).unwrap();
        let lam = 2.5;
        let xs: Vec<f64> = x.iter().map(|v| v * lam).collect();
        let xhs: Vec<f64> = xhat.iter().map(|v| v * lam).collect();
        assert!((topk_error(&xs, &xhs, 3).unwrap() - lam * base).abs() < 1e-12);
        let perm = [4, 2, 0, 5, 1, 3];
        let xp: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
        let xhp: Vec<f64> = perm.iter().map(|&i| xhat[i]).collect();
        assert!((topk_error(&xp, &xhp, 3).unwrap() - base).abs() < 1e-12);
        let pe = point_errors(&x, &xhat, &[0, 1]);
        assert!((pe[0] - 0.3).abs() < 1e-12 && (pe[1] - 0.9).abs() < 1e-12);
    }
}
