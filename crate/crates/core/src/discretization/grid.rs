use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One coordinate direction: nodes `−L + jΔ`, `j = 0..n`, with `Δ = 2L/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub half_length: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn new(half_length: f64, n: usize, periodic: bool) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return invalid(format!("box half-length must be positive, got {half_length}"));
        }
        if n < 8 || !n.is_power_of_two() {
            return invalid(format!("resolution must be a power of two and at least 8, got {n}"));
        }
        Ok(Self { half_length, n, periodic })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Angular frequencies in FFT order. The Nyquist entry carries the
    /// negative value `−πn/(2L)`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n as i64;
        let base = PI / self.half_length;
        (0..n).map(|m| base * if m < n / 2 { m } else { m - n } as f64).collect()
    }

    /// Signed mode index in FFT order.
    pub fn mode(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }
}

/// A rectangular lattice over `x ∈ ℝ^d` and optionally `y ∈ ℝ^d` and `t`.
///
/// Flat indices are row-major with `x_1` fastest, in the axis order
/// `x_1..x_d, y_1..y_d, t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub x: Axis,
    pub y: Option<Axis>,
    pub t: Option<Axis>,
}

impl Grid {
    pub fn new(d: usize, x: Axis, y: Option<Axis>, t: Option<Axis>) -> Result<Self> {
        if d == 0 {
            return invalid("spatial dimension must be at least 1");
        }
        if t.is_some() && y.is_none() {
            return invalid("a time axis requires a y axis");
        }
        Ok(Self { d, x, y, t })
    }

    /// Periodic in `x` and `y`, non-periodic in `t`.
    pub fn xyt(d: usize, half: [f64; 3], n: [usize; 3]) -> Result<Self> {
        Self::new(
            d,
            Axis::new(half[0], n[0], true)?,
            Some(Axis::new(half[1], n[1], true)?),
            Some(Axis::new(half[2], n[2], false)?),
        )
    }

    /// Periodic in `x` and `y`.
    pub fn xy(d: usize, half: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Self::new(d, Axis::new(half[0], n[0], true)?, Some(Axis::new(half[1], n[1], true)?), None)
    }

    /// Periodic in `x` only.
    pub fn x_only(d: usize, half: f64, n: usize) -> Result<Self> {
        Self::new(d, Axis::new(half, n, true)?, None, None)
    }

    /// Axis descriptors in storage order.
    pub fn axes(&self) -> Vec<Axis> {
        let mut v = vec![self.x; self.d];
        if let Some(y) = self.y {
            v.extend(std::iter::repeat_n(y, self.d));
        }
        if let Some(t) = self.t {
            v.push(t);
        }
        v
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes().iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points per `x` block (`N_x^d`).
    pub fn x_block(&self) -> usize {
        self.x.n.pow(self.d as u32)
    }

    /// Points per `y` block (`N_y^d`, or 1 without a y axis).
    pub fn y_block(&self) -> usize {
        self.y.map_or(1, |a| a.n.pow(self.d as u32))
    }

    pub fn nt(&self) -> usize {
        self.t.map_or(1, |a| a.n)
    }

    /// Points in one `(x, y)` slice.
    pub fn slice_len(&self) -> usize {
        self.x_block() * self.y_block()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes().iter().map(|a| a.spacing()).product()
    }

    pub fn t_node(&self, k: usize) -> f64 {
        self.t.map_or(0.0, |a| a.node(k))
    }

    /// Decodes a multi-index within an `x` or `y` block.
    pub fn unflatten(block_index: usize, n: usize, out: &mut [usize]) {
        let mut r = block_index;
        for o in out.iter_mut() {
            *o = r % n;
            r /= n;
        }
    }

    /// Coordinates of the node with flat index `idx`; returns `t`.
    pub fn coords(&self, idx: usize, x: &mut [f64], y: &mut [f64]) -> f64 {
        let xb = self.x_block();
        let yb = self.y_block();
        let mut ix = idx % xb;
        for xi in x.iter_mut() {
            *xi = self.x.node(ix % self.x.n);
            ix /= self.x.n;
        }
        if let Some(ya) = self.y {
            let mut iy = (idx / xb) % yb;
            for yi in y.iter_mut() {
                *yi = ya.node(iy % ya.n);
                iy /= ya.n;
            }
        }
        self.t_node(idx / (xb * yb))
    }

    /// The same lattice with every resolution multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let r = |a: Axis| Axis::new(a.half_length, a.n * factor, a.periodic);
        Self::new(self.d, r(self.x)?, self.y.map(r).transpose()?, self.t.map(r).transpose()?)
    }

    /// The lattice with box half-lengths scaled as `(s³ Lx, s Ly, s² Lt)`.
    pub fn dilated(&self, s: f64) -> Result<Self> {
        let r = |a: Axis, k: i32| Axis::new(a.half_length * s.powi(k), a.n, a.periodic);
        Self::new(self.d, r(self.x, 3)?, self.y.map(|a| r(a, 1)).transpose()?, self.t.map(|a| r(a, 2)).transpose()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_validation() {
        assert!(Axis::new(1.0, 12, true).is_err());
        assert!(Axis::new(1.0, 4, true).is_err());
        assert!(Axis::new(-1.0, 16, true).is_err());
        let a = Axis::new(2.0, 8, true).unwrap();
        assert_eq!(a.nodes()[0], -2.0);
        assert_eq!(a.spacing(), 0.5);
        assert_eq!(a.mode(5), -3);
    }

    #[test]
    fn coordinates_follow_storage_order() {
        let g = Grid::xyt(2, [1.0, 2.0, 3.0], [8, 8, 16]).unwrap();
        assert_eq!(g.shape(), vec![8, 8, 8, 8, 16]);
        let (mut x, mut y) = ([0.0; 2], [0.0; 2]);
        let idx = 3 + 8 * (5 + 8 * (1 + 8 * (2 + 8 * 7)));
        let t = g.coords(idx, &mut x, &mut y);
        assert_eq!(x, [g.x.node(3), g.x.node(5)]);
        assert_eq!(y, [g.y.unwrap().node(1), g.y.unwrap().node(2)]);
        assert_eq!(t, g.t.unwrap().node(7));
    }
}
