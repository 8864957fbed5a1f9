use crate::error::{Error, Result};

/// Uniform cell-centered grid on `[0, length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    cells: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(cells: usize, length: f64) -> Result<Self> {
        if cells < 2 {
            return Err(Error::Params(format!("grid needs at least 2 cells, got {cells}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Params(format!("grid length {length} must be positive")));
        }
        Ok(Self { cells, length })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.spacing()
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.cells).map(|k| self.center(k)).collect()
    }

    /// `cells + 1` face positions including both ends.
    pub fn face_positions(&self) -> Vec<f64> {
        (0..=self.cells).map(|k| k as f64 * self.spacing()).collect()
    }

    pub fn refined(&self) -> Self {
        Self {
            cells: 2 * self.cells,
            length: self.length,
        }
    }
}
