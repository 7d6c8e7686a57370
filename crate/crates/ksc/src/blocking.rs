//! Partition a signal into blocks, flatten each block to a vector, and
//! reassemble.
//!
//! Flattening convention (shared with the patch-embedding kernel layout):
//! within a 2-D block, entry `(t_local, f_local)` lands at flat position
//! `t_local * M + f_local` (0-based), i.e. row-major with time as the first
//! axis. Blocks themselves are visited in reading order, time-major.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::keys::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemainderPolicy {
    /// Dimensions must be divisible by the block size.
    Strict,
    /// Trailing rows/columns/samples that do not fill a block are carried
    /// through untouched.
    Passthrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    pub mode: Mode,
    pub block_size: usize,
    pub remainder: RemainderPolicy,
}

impl BlockSpec {
    pub fn new(mode: Mode, block_size: usize, remainder: RemainderPolicy) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidParameter("block size M must be >= 1".into()));
        }
        Ok(BlockSpec {
            mode,
            block_size,
            remainder,
        })
    }

    /// Flattened block length: M^2 in 2-D, M in 1-D.
    pub fn block_len(&self) -> usize {
        crate::keys::key_len(self.mode, self.block_size)
    }
}

/// A signal as seen by the ciphers: either a sample sequence or a
/// time-by-frequency matrix (rows = time frames).
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    OneD(Vec<f64>),
    TwoD(Array2<f64>),
}

impl Signal {
    pub fn mode(&self) -> Mode {
        match self {
            Signal::OneD(_) => Mode::OneD,
            Signal::TwoD(_) => Mode::TwoD,
        }
    }

    pub fn dims_label(&self) -> String {
        match self {
            Signal::OneD(v) => format!("N={}", v.len()),
            Signal::TwoD(m) => format!("T={} F={}", m.nrows(), m.ncols()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridShape {
    OneD { count: usize },
    TwoD { rows: usize, cols: usize },
}

/// Cells not covered by any block under the passthrough policy, kept with
/// enough structure to restore them to their original positions.
#[derive(Debug, Clone, PartialEq)]
pub enum Remainder {
    None,
    /// Trailing samples of a 1-D signal.
    OneD(Vec<f64>),
    /// `bottom` holds the trailing rows across the full width; `right` holds
    /// the trailing columns of the covered rows.
    TwoD {
        bottom: Array2<f64>,
        right: Array2<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OriginalDims {
    OneD(usize),
    TwoD(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    pub blocks: Vec<Vec<f64>>,
    pub shape: GridShape,
    pub block_size: usize,
    pub remainder: Remainder,
    pub original: OriginalDims,
}

pub fn partition(signal: &Signal, spec: &BlockSpec) -> Result<BlockGrid> {
    if signal.mode() != spec.mode {
        return Err(Error::DimensionMismatch(format!(
            "spec is {} but signal is {} ({})",
            spec.mode,
            signal.mode(),
            signal.dims_label()
        )));
    }
    let m = spec.block_size;
    match signal {
        Signal::OneD(samples) => {
            let n = samples.len();
            if spec.remainder == RemainderPolicy::Strict && n % m != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "N={n} not divisible by M={m} under strict policy"
                )));
            }
            let count = n / m;
            let blocks: Vec<Vec<f64>> = (0..count)
                .map(|b| samples[b * m..(b + 1) * m].to_vec())
                .collect();
            let remainder = if n % m == 0 {
                Remainder::None
            } else {
                Remainder::OneD(samples[count * m..].to_vec())
            };
            Ok(BlockGrid {
                blocks,
                shape: GridShape::OneD { count },
                block_size: m,
                remainder,
                original: OriginalDims::OneD(n),
            })
        }
        Signal::TwoD(matrix) => {
            let (t, f) = matrix.dim();
            if spec.remainder == RemainderPolicy::Strict && (t % m != 0 || f % m != 0) {
                return Err(Error::DimensionMismatch(format!(
                    "T={t} F={f} not divisible by M={m} under strict policy"
                )));
            }
            let rows = t / m;
            let cols = f / m;
            let mut blocks = Vec::with_capacity(rows * cols);
            for br in 0..rows {
                for bc in 0..cols {
                    let mut block = Vec::with_capacity(m * m);
                    for dt in 0..m {
                        for df in 0..m {
                            block.push(matrix[(br * m + dt, bc * m + df)]);
                        }
                    }
                    blocks.push(block);
                }
            }
            let covered_t = rows * m;
            let covered_f = cols * m;
            let remainder = if covered_t == t && covered_f == f {
                Remainder::None
            } else {
                let bottom = matrix
                    .slice(ndarray::s![covered_t.., ..])
                    .to_owned();
                let right = matrix
                    .slice(ndarray::s![..covered_t, covered_f..])
                    .to_owned();
                Remainder::TwoD { bottom, right }
            };
            Ok(BlockGrid {
                blocks,
                shape: GridShape::TwoD { rows, cols },
                block_size: m,
                remainder,
                original: OriginalDims::TwoD(t, f),
            })
        }
    }
}

pub fn assemble(grid: &BlockGrid) -> Result<Signal> {
    let m = grid.block_size;
    let block_len = match grid.shape {
        GridShape::OneD { .. } => m,
        GridShape::TwoD { .. } => m * m,
    };
    for (i, block) in grid.blocks.iter().enumerate() {
        if block.len() != block_len {
            return Err(Error::DimensionMismatch(format!(
                "block {i} has length {}, expected {block_len}",
                block.len()
            )));
        }
    }
    match (&grid.shape, &grid.original) {
        (GridShape::OneD { count }, OriginalDims::OneD(n)) => {
            if grid.blocks.len() != *count {
                return Err(Error::DimensionMismatch(format!(
                    "grid holds {} blocks but shape says {count}",
                    grid.blocks.len()
                )));
            }
            let mut samples = Vec::with_capacity(*n);
            for block in &grid.blocks {
                samples.extend_from_slice(block);
            }
            match &grid.remainder {
                Remainder::None => {}
                Remainder::OneD(tail) => samples.extend_from_slice(tail),
                Remainder::TwoD { .. } => {
                    return Err(Error::DimensionMismatch(
                        "2-D remainder attached to a 1-D grid".into(),
                    ))
                }
            }
            if samples.len() != *n {
                return Err(Error::DimensionMismatch(format!(
                    "assembled {} samples, expected {n}",
                    samples.len()
                )));
            }
            Ok(Signal::OneD(samples))
        }
        (GridShape::TwoD { rows, cols }, OriginalDims::TwoD(t, f)) => {
            if grid.blocks.len() != rows * cols {
                return Err(Error::DimensionMismatch(format!(
                    "grid holds {} blocks but shape says {rows}x{cols}",
                    grid.blocks.len()
                )));
            }
            let covered_t = rows * m;
            let covered_f = cols * m;
            let mut matrix = Array2::<f64>::zeros((*t, *f));
            for br in 0..*rows {
                for bc in 0..*cols {
                    let block = &grid.blocks[br * cols + bc];
                    for dt in 0..m {
                        for df in 0..m {
                            matrix[(br * m + dt, bc * m + df)] = block[dt * m + df];
                        }
                    }
                }
            }
            match &grid.remainder {
                Remainder::None => {
                    if covered_t != *t || covered_f != *f {
                        return Err(Error::DimensionMismatch(
                            "missing remainder for partially covered matrix".into(),
                        ));
                    }
                }
                Remainder::TwoD { bottom, right } => {
                    if bottom.dim() != (*t - covered_t, *f) || right.dim() != (covered_t, *f - covered_f) {
                        return Err(Error::DimensionMismatch(
                            "remainder dimensions do not match the original matrix".into(),
                        ));
                    }
                    matrix
                        .slice_mut(ndarray::s![covered_t.., ..])
                        .assign(bottom);
                    matrix
                        .slice_mut(ndarray::s![..covered_t, covered_f..])
                        .assign(right);
                }
                Remainder::OneD(_) => {
                    return Err(Error::DimensionMismatch(
                        "1-D remainder attached to a 2-D grid".into(),
                    ))
                }
            }
            Ok(Signal::TwoD(matrix))
        }
        _ => Err(Error::DimensionMismatch(
            "grid shape and original dimensions disagree".into(),
        )),
    }
}
