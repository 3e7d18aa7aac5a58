//! Recovering coordinates and top-k sets from a sketch.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::sketch::{CountMinTable, CountSketchTable, SketchConfig};

/// Median by selection. Even lengths average the two central order
/// statistics.
///
/// Panics on an empty slice; every sketch has at least one row.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    DirectMedian,
    MedianOfMedians { block_count: u32 },
    /// Count-Min: minimum over rows.
    RowMinimum,
}

/// A full estimate `x̂` over the domain `[0, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateVector {
    pub values: Vec<f64>,
    pub config: SketchConfig,
    pub estimator: EstimatorKind,
}

impl EstimateVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `median_u s_u(i) * y[u][h_u(i)]`.
pub fn point_estimate(table: &CountSketchTable, item: u64) -> f64 {
    let mut buf = Vec::with_capacity(table.rows() as usize);
    point_estimate_with(table, item, &mut buf)
}

fn point_estimate_with(table: &CountSketchTable, item: u64, buf: &mut Vec<f64>) -> f64 {
    table.row_values_into(item, buf);
    median(buf)
}

/// `min_u y[u][h_u(i)]`. Never below `x_i` when the sketched vector is
/// nonnegative.
pub fn point_estimate_countmin(table: &CountMinTable, item: u64) -> f64 {
    let c = table.columns();
    (0..table.rows())
        .map(|u| table.cell(u, table.hasher(u).column(item, c)))
        .fold(f64::INFINITY, f64::min)
}

pub fn estimate_vector(table: &CountSketchTable, n: usize) -> Result<EstimateVector> {
    if n == 0 {
        return Err(Error::input("domain size must be at least 1"));
    }
    let mut buf = Vec::with_capacity(table.rows() as usize);
    let values = (0..n as u64)
        .map(|i| point_estimate_with(table, i, &mut buf))
        .collect();
    Ok(EstimateVector {
        values,
        config: *table.config(),
        estimator: EstimatorKind::DirectMedian,
    })
}

pub fn estimate_vector_countmin(table: &CountMinTable, n: usize) -> Result<EstimateVector> {
    if n == 0 {
        return Err(Error::input("domain size must be at least 1"));
    }
    let values = (0..n as u64)
        .map(|i| point_estimate_countmin(table, i))
        .collect();
    Ok(EstimateVector {
        values,
        config: *table.config(),
        estimator: EstimatorKind::RowMinimum,
    })
}

/// Assignment of sketch rows to `g` equally sized blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionScheme {
    block_count: u32,
    assignment: Vec<u32>,
}

impl PartitionScheme {
    /// Row `u` goes to block `floor(u * g / R)`.
    pub fn contiguous(rows: u32, block_count: u32) -> Result<Self> {
        check_divides(rows, block_count)?;
        let assignment = (0..rows)
            .map(|u| (u64::from(u) * u64::from(block_count) / u64::from(rows)) as u32)
            .collect();
        Ok(Self {
            block_count,
            assignment,
        })
    }

    pub fn from_assignment(assignment: Vec<u32>, block_count: u32) -> Result<Self> {
        let rows = u32::try_from(assignment.len())
            .map_err(|_| Error::InvalidPartition("too many rows".into()))?;
        check_divides(rows, block_count)?;
        let size = rows / block_count;
        let mut counts = vec![0u32; block_count as usize];
        for &b in &assignment {
            let slot = counts.get_mut(b as usize).ok_or_else(|| {
                Error::InvalidPartition(format!("block {b} out of range 0..{block_count}"))
            })?;
            *slot += 1;
        }
        if let Some(b) = counts.iter().position(|&c| c != size) {
            return Err(Error::InvalidPartition(format!(
                "block {b} has {} rows, expected {size}",
                counts[b]
            )));
        }
        Ok(Self {
            block_count,
            assignment,
        })
    }

    pub fn block_count(&self) -> u32 {
        self.block_count
    }

    pub fn rows(&self) -> u32 {
        self.assignment.len() as u32
    }

    pub fn block_of(&self, row: u32) -> u32 {
        self.assignment[row as usize]
    }
}

fn check_divides(rows: u32, block_count: u32) -> Result<()> {
    if rows == 0 || block_count == 0 || rows % block_count != 0 {
        return Err(Error::InvalidPartition(format!(
            "{block_count} blocks do not evenly divide {rows} rows"
        )));
    }
    Ok(())
}

/// Median over blocks of the within-block median of the row values.
pub fn median_of_medians_estimate(
    table: &CountSketchTable,
    item: u64,
    scheme: &PartitionScheme,
) -> Result<f64> {
    if scheme.rows() != table.rows() {
        return Err(Error::InvalidPartition(format!(
            "scheme covers {} rows, table has {}",
            scheme.rows(),
            table.rows()
        )));
    }
    let row_values = table.row_values(item);
    Ok(median_of_blocks(&row_values, scheme))
}

fn median_of_blocks(row_values: &[f64], scheme: &PartitionScheme) -> f64 {
    let g = scheme.block_count as usize;
    let mut blocks: Vec<Vec<f64>> = vec![Vec::with_capacity(row_values.len() / g); g];
    for (u, &v) in row_values.iter().enumerate() {
        blocks[scheme.assignment[u] as usize].push(v);
    }
    let mut block_medians: Vec<f64> = blocks.iter_mut().map(|b| median(b)).collect();
    median(&mut block_medians)
}

pub fn estimate_vector_median_of_medians(
    table: &CountSketchTable,
    n: usize,
    scheme: &PartitionScheme,
) -> Result<EstimateVector> {
    if n == 0 {
        return Err(Error::input("domain size must be at least 1"));
    }
    let values = (0..n as u64)
        .map(|i| median_of_medians_estimate(table, i, scheme))
        .collect::<Result<_>>()?;
    Ok(EstimateVector {
        values,
        config: *table.config(),
        estimator: EstimatorKind::MedianOfMedians {
            block_count: scheme.block_count,
        },
    })
}

/// Decreasing magnitude, then increasing index.
#[inline]
pub(crate) fn magnitude_order(values: &[f64], a: usize, b: usize) -> Ordering {
    values[b]
        .abs()
        .total_cmp(&values[a].abs())
        .then_with(|| a.cmp(&b))
}

/// Indices of the `k` largest `|values[i]|`, ordered by decreasing magnitude
/// with ties broken toward the smaller index.
pub fn top_k_indices(values: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::input("k must be at least 1"));
    }
    if k > values.len() {
        return Err(Error::input(format!(
            "k = {k} exceeds domain size {}",
            values.len()
        )));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| magnitude_order(values, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| magnitude_order(values, a, b));
    Ok(idx)
}
