use super::Grid;
use crate::error::{invalid, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Real samples on every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

const CHUNK: usize = 1 << 12;

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("field has non-finite values");
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    /// Samples `f(x, y, t)` at every node. Missing axes are passed as an
    /// empty `y` and `t = 0`.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], f64) -> f64 + Sync,
    {
        let d = grid.d;
        let dy = if grid.y.is_some() { d } else { 0 };
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; dy];
            for (k, v) in chunk.iter_mut().enumerate() {
                let t = grid.coords(c * CHUNK + k, &mut x, &mut y);
                *v = f(&x, &y, t);
            }
        });
        Self { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    /// `self − other` on a shared grid.
    pub fn minus(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return invalid("fields live on different grids");
        }
        Ok(Field { grid: self.grid.clone(), values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }

    /// The `(x, y)` slice at time index `k`.
    pub fn t_slice(&self, k: usize) -> &[f64] {
        let n = self.grid.slice_len();
        &self.values[k * n..(k + 1) * n]
    }
}
