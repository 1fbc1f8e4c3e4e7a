//! Row-major time-frequency grids.
//!
//! A [`Grid`] holds `T` frames (rows) of `F` values (columns) in one
//! contiguous buffer. Spectrogram magnitudes, phases and masks all share
//! this layout, so masks multiply onto magnitudes bin for bin.

use crate::error::{Error, Result};

/// Dense T x F grid of `f64` values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    frames: usize,
    bins: usize,
    data: Vec<f64>,
}

/// A time-frequency mask. Entries are unbounded reals; negative values are
/// meaningful diagnostics and are preserved as-is.
pub type Mask = Grid;

impl Grid {
    /// All-zero grid with `frames` rows and `bins` columns.
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self {
            frames,
            bins,
            data: vec![0.0; frames * bins],
        }
    }

    /// Grid filled with a constant.
    pub fn filled(frames: usize, bins: usize, value: f64) -> Self {
        Self {
            frames,
            bins,
            data: vec![value; frames * bins],
        }
    }

    /// Build from a flat row-major buffer. `data.len()` must equal
    /// `frames * bins`.
    pub fn from_vec(frames: usize, bins: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != frames * bins {
            return Err(Error::ShapeMismatch {
                expected: format!("{frames}x{bins} = {} values", frames * bins),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Self { frames, bins, data })
    }

    /// Build from per-frame rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let frames = rows.len();
        let bins = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(frames * bins);
        for row in rows {
            if row.len() != bins {
                return Err(Error::ShapeMismatch {
                    expected: format!("rows of {bins}"),
                    got: format!("row of {}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { frames, bins, data })
    }

    /// Number of time frames (rows).
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Number of frequency bins (columns).
    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Total entry count `T * F`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(frames, bins)` pair.
    pub fn shape(&self) -> (usize, usize) {
        (self.frames, self.bins)
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.frames == other.frames && self.bins == other.bins
    }

    /// Flat row-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// One frame as a contiguous slice.
    pub fn row(&self, frame: usize) -> &[f64] {
        &self.data[frame * self.bins..(frame + 1) * self.bins]
    }

    pub fn row_mut(&mut self, frame: usize) -> &mut [f64] {
        &mut self.data[frame * self.bins..(frame + 1) * self.bins]
    }

    /// Iterator over frames.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.bins)
    }

    pub fn get(&self, frame: usize, bin: usize) -> f64 {
        self.data[frame * self.bins + bin]
    }

    pub fn set(&mut self, frame: usize, bin: usize, value: f64) {
        self.data[frame * self.bins + bin] = value;
    }

    /// Elementwise map into a new grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            frames: self.frames,
            bins: self.bins,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// True if every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
