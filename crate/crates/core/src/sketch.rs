//! Count-Sketch and Count-Min tables.
//!
//! Both are `R x C` arrays of `f64` accumulators driven by the same per-row
//! hash functions. Count-Sketch adds `s_u(i) * delta` to cell `(u, h_u(i))`;
//! Count-Min adds `delta` unsigned. The two table flavours are one generic
//! [`Table`] distinguished by a marker type, so they share construction,
//! merging and the on-disk layout.

use std::fmt;
use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::hashing::RowHasher;

/// Which update rule a table uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SketchKind {
    CountSketch,
    CountMin,
}

impl SketchKind {
    pub fn code(self) -> u8 {
        match self {
            SketchKind::CountSketch => 0,
            SketchKind::CountMin => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SketchKind::CountSketch),
            1 => Some(SketchKind::CountMin),
            _ => None,
        }
    }
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SketchKind::CountSketch => "count_sketch",
            SketchKind::CountMin => "count_min",
        })
    }
}

/// Dimensions and hashing identity of a sketch. Two tables are mergeable iff
/// their configs are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SketchConfig {
    pub rows: u32,
    pub columns: u32,
    pub master_seed: u64,
    pub kind: SketchKind,
}

impl SketchConfig {
    pub fn new(rows: u32, columns: u32, master_seed: u64, kind: SketchKind) -> Result<Self> {
        let config = Self {
            rows,
            columns,
            master_seed,
            kind,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn count_sketch(rows: u32, columns: u32, master_seed: u64) -> Result<Self> {
        Self::new(rows, columns, master_seed, SketchKind::CountSketch)
    }

    pub fn count_min(rows: u32, columns: u32, master_seed: u64) -> Result<Self> {
        Self::new(rows, columns, master_seed, SketchKind::CountMin)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::config("rows must be at least 1"));
        }
        if self.columns == 0 {
            return Err(Error::config("columns must be at least 1"));
        }
        Ok(())
    }

    pub fn with_seed(self, master_seed: u64) -> Self {
        Self {
            master_seed,
            ..self
        }
    }

    pub fn with_kind(self, kind: SketchKind) -> Self {
        Self { kind, ..self }
    }

    pub fn cell_count(&self) -> usize {
        self.rows as usize * self.columns as usize
    }
}

mod sealed {
    pub trait Sealed {}
}

/// Update rule of a table flavour.
pub trait TableKind: sealed::Sealed + Send + Sync + 'static {
    const KIND: SketchKind;

    /// Contribution of `delta` to a cell given the row's sign for the item.
    fn contribution(sign: f64, delta: f64) -> f64;
}

/// Marker for Count-Sketch tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signed {}

/// Marker for Count-Min tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unsigned {}

impl sealed::Sealed for Signed {}
impl sealed::Sealed for Unsigned {}

impl TableKind for Signed {
    const KIND: SketchKind = SketchKind::CountSketch;

    #[inline]
    fn contribution(sign: f64, delta: f64) -> f64 {
        sign * delta
    }
}

impl TableKind for Unsigned {
    const KIND: SketchKind = SketchKind::CountMin;

    #[inline]
    fn contribution(_sign: f64, delta: f64) -> f64 {
        delta
    }
}

pub type CountSketchTable = Table<Signed>;
pub type CountMinTable = Table<Unsigned>;

/// An `R x C` linear sketch. Cells are stored row-major.
pub struct Table<K: TableKind> {
    config: SketchConfig,
    cells: Vec<f64>,
    hashers: Vec<RowHasher>,
    _kind: PhantomData<K>,
}

impl<K: TableKind> Clone for Table<K> {
    fn clone(&self) -> Self {
        Self {
            config: self.config,
            cells: self.cells.clone(),
            hashers: self.hashers.clone(),
            _kind: PhantomData,
        }
    }
}

impl<K: TableKind> fmt::Debug for Table<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Table")
            .field("config", &self.config)
            .field("cells", &self.cells)
            .finish()
    }
}

impl<K: TableKind> PartialEq for Table<K> {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.cells == other.cells
    }
}

const MAGIC: &[u8; 3] = b"CSK";
const FORMAT_VERSION: u8 = b'1';
const HEADER_LEN: usize = 4 + 1 + 4 + 4 + 8;

impl<K: TableKind> Table<K> {
    pub fn new(config: SketchConfig) -> Result<Self> {
        config.validate()?;
        if config.kind != K::KIND {
            return Err(Error::config(format!(
                "config kind {} does not match table kind {}",
                config.kind,
                K::KIND
            )));
        }
        let hashers = (0..config.rows)
            .map(|u| RowHasher::new(config.master_seed, u))
            .collect();
        Ok(Self {
            config,
            cells: vec![0.0; config.cell_count()],
            hashers,
            _kind: PhantomData,
        })
    }

    /// Builds a table with explicit cell contents (row-major).
    pub fn from_cells(config: SketchConfig, cells: Vec<f64>) -> Result<Self> {
        let mut table = Self::new(config)?;
        if cells.len() != table.cells.len() {
            return Err(Error::input(format!(
                "expected {} cells, got {}",
                table.cells.len(),
                cells.len()
            )));
        }
        if let Some(pos) = cells.iter().position(|c| !c.is_finite()) {
            return Err(Error::input(format!("cell {pos} is not finite")));
        }
        table.cells = cells;
        Ok(table)
    }

    /// Sketches the vector `x`, treating position `i` as item `i`.
    pub fn from_vector(config: SketchConfig, x: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::input("cannot sketch an empty vector"));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("entry {pos} is not finite")));
        }
        let mut table = Self::new(config)?;
        for (i, &v) in x.iter().enumerate() {
            table.apply(i as u64, v);
        }
        Ok(table)
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn rows(&self) -> u32 {
        self.config.rows
    }

    pub fn columns(&self) -> u32 {
        self.config.columns
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn row(&self, u: u32) -> &[f64] {
        let c = self.config.columns as usize;
        let start = u as usize * c;
        &self.cells[start..start + c]
    }

    pub fn cell(&self, u: u32, v: u32) -> f64 {
        self.row(u)[v as usize]
    }

    pub fn hasher(&self, u: u32) -> &RowHasher {
        &self.hashers[u as usize]
    }

    /// Adds `delta` to item `item`. Zero deltas leave the table untouched.
    pub fn update(&mut self, item: u64, delta: f64) -> Result<()> {
        if !delta.is_finite() {
            return Err(Error::input(format!("delta {delta} for item {item} is not finite")));
        }
        self.apply(item, delta);
        Ok(())
    }

    #[inline]
    fn apply(&mut self, item: u64, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let c = self.config.columns;
        for (u, hasher) in self.hashers.iter().enumerate() {
            let (col, sign) = hasher.locate(item, c);
            self.cells[u * c as usize + col] += K::contribution(sign, delta);
        }
    }

    /// The per-row cell values seen by `item`, sign-corrected for
    /// Count-Sketch. Writes `R` values into `out`.
    pub fn row_values_into(&self, item: u64, out: &mut Vec<f64>) {
        out.clear();
        let c = self.config.columns;
        out.extend(self.hashers.iter().enumerate().map(|(u, hasher)| {
            let (col, sign) = hasher.locate(item, c);
            K::contribution(sign, self.cells[u * c as usize + col])
        }));
    }

    pub fn row_values(&self, item: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.config.rows as usize);
        self.row_values_into(item, &mut out);
        out
    }

    /// Cell-wise sum of two tables with identical configs.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.config != other.config {
            return Err(Error::Incompatible(format!(
                "{:?} vs {:?}",
                self.config, other.config
            )));
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a += b;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|&c| c == 0.0)
    }

    /// Encodes the table: `"CSK1"`, kind byte, `R` (u32), `C` (u32),
    /// seed (u64), then `R*C` little-endian `f64` cells in row-major order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.cells.len());
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.push(K::KIND.code());
        out.extend_from_slice(&self.config.rows.to_le_bytes());
        out.extend_from_slice(&self.config.columns.to_le_bytes());
        out.extend_from_slice(&self.config.master_seed.to_le_bytes());
        for c in &self.cells {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut reader = Reader { bytes, pos: 0 };
        let magic = reader.take(3, "magic")?;
        if magic != MAGIC {
            return Err(decode_err(0, "bad magic"));
        }
        let version = reader.take(1, "format version")?[0];
        if version != FORMAT_VERSION {
            return Err(decode_err(
                3,
                format!("unsupported format version {:?}", version as char),
            ));
        }
        let kind_code = reader.take(1, "kind")?[0];
        let kind = SketchKind::from_code(kind_code)
            .ok_or_else(|| decode_err(4, format!("unknown sketch kind {kind_code}")))?;
        if kind != K::KIND {
            return Err(decode_err(4, format!("expected {} table, found {kind}", K::KIND)));
        }
        let rows = reader.u32("rows")?;
        if rows == 0 {
            return Err(decode_err(5, "rows must be at least 1"));
        }
        let columns = reader.u32("columns")?;
        if columns == 0 {
            return Err(decode_err(9, "columns must be at least 1"));
        }
        let master_seed = reader.u64("master seed")?;
        let count = (rows as usize)
            .checked_mul(columns as usize)
            .ok_or_else(|| decode_err(5, "table dimensions overflow"))?;
        let expected = count
            .checked_mul(8)
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or_else(|| decode_err(5, "table dimensions overflow"))?;
        if bytes.len() < expected {
            return Err(decode_err(
                bytes.len(),
                format!("truncated: expected {expected} bytes, found {}", bytes.len()),
            ));
        }
        if bytes.len() > expected {
            return Err(decode_err(expected, "trailing bytes after last cell"));
        }
        let mut cells = Vec::with_capacity(count);
        for _ in 0..count {
            let at = reader.pos;
            let v = reader.f64("cell")?;
            if !v.is_finite() {
                return Err(decode_err(at, "cell value is not finite"));
            }
            cells.push(v);
        }
        let config = SketchConfig {
            rows,
            columns,
            master_seed,
            kind,
        };
        Self::from_cells(config, cells)
    }
}

fn decode_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Decode {
        offset,
        reason: reason.into(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(decode_err(self.bytes.len(), format!("truncated while reading {what}")));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Reads only the kind byte of an encoded table.
pub fn peek_kind(bytes: &[u8]) -> Result<SketchKind> {
    if bytes.len() < 5 {
        return Err(decode_err(bytes.len(), "truncated header"));
    }
    if &bytes[..3] != MAGIC {
        return Err(decode_err(0, "bad magic"));
    }
    SketchKind::from_code(bytes[4])
        .ok_or_else(|| decode_err(4, format!("unknown sketch kind {}", bytes[4])))
}
