//! Continuous search-space positions: stations x slots grids of signed
//! energies, with per-row bounds and hard-zeroed columns.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PositionError {
    #[error("position shapes differ: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("empty population")]
    EmptyPopulation,
}

/// A candidate schedule in its continuous form: one signed energy per
/// station/slot cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Position {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Position {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Position) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub(crate) fn shape_check(&self, other: &Position) -> Result<(), PositionError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(PositionError::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            })
        }
    }
}

/// Cell bounds of the search space: a symmetric energy band per station
/// row plus columns that are pinned to zero (balanced slots and slots
/// outside the service window).
#[derive(Debug, Clone)]
pub struct PositionBounds {
    rows: usize,
    cols: usize,
    row_lb: Vec<f64>,
    row_ub: Vec<f64>,
    zero_cols: Vec<bool>,
}

impl PositionBounds {
    pub fn new(row_lb: Vec<f64>, row_ub: Vec<f64>, zero_cols: Vec<bool>) -> Self {
        assert_eq!(row_lb.len(), row_ub.len());
        Self {
            rows: row_ub.len(),
            cols: zero_cols.len(),
            row_lb,
            row_ub,
            zero_cols,
        }
    }

    /// Band `[-ub_j, +ub_j]` per row.
    pub fn symmetric(row_ub: Vec<f64>, zero_cols: Vec<bool>) -> Self {
        let row_lb = row_ub.iter().map(|u| -u).collect();
        Self::new(row_lb, row_ub, zero_cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn lower(&self, row: usize) -> f64 {
        self.row_lb[row]
    }

    pub fn upper(&self, row: usize) -> f64 {
        self.row_ub[row]
    }

    pub fn is_zero_col(&self, col: usize) -> bool {
        self.zero_cols[col]
    }

    /// Clamps every cell into its band, pins zeroed columns, and maps any
    /// non-finite value to zero, so the result is always a valid position.
    pub fn clamp(&self, position: &mut Position) {
        debug_assert_eq!(position.rows(), self.rows);
        debug_assert_eq!(position.cols(), self.cols);
        for row in 0..self.rows {
            for col in 0..self.cols {
                let v = if self.zero_cols[col] {
                    0.0
                } else {
                    let clamped = position.get(row, col).clamp(self.row_lb[row], self.row_ub[row]);
                    if clamped.is_finite() {
                        clamped
                    } else {
                        0.0
                    }
                };
                position.set(row, col, v);
            }
        }
    }
}

/// Cell-wise average of the population positions, taken over the nonzero
/// cells only; a cell that is zero in every position stays zero.
pub fn mean_position(positions: &[&Position]) -> Result<Position, PositionError> {
    let Some(first) = positions.first() else {
        return Err(PositionError::EmptyPopulation);
    };
    for p in positions {
        first.shape_check(p)?;
    }
    let mut mean = Position::zeros(first.rows(), first.cols());
    for row in 0..first.rows() {
        for col in 0..first.cols() {
            let mut sum = 0.0;
            let mut count = 0usize;
            for p in positions {
                let v = p.get(row, col);
                if v != 0.0 {
                    sum += v;
                    count += 1;
                }
            }
            if count > 0 {
                mean.set(row, col, sum / count as f64);
            }
        }
    }
    Ok(mean)
}
