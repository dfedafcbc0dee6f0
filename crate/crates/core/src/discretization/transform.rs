//! Multi-axis discrete Fourier transforms on row-major buffers.
//!
//! The inverse carries the `1/n` factor of each transformed axis, so
//! `inverse(forward(f)) = f`.

use super::{Field, Grid};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Transforms `data` (row-major, first axis fastest) along each listed axis.
pub fn fft_axes(data: &mut [Complex64], shape: &[usize], axes: &[usize], dir: Direction) {
    let mut planner = FftPlanner::new();
    for &axis in axes {
        let n = shape[axis];
        let plan = match dir {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        transform_axis(data, shape, axis, &plan);
        if dir == Direction::Inverse {
            let s = 1.0 / n as f64;
            data.par_iter_mut().for_each(|v| *v *= s);
        }
    }
}

fn transform_axis(data: &mut [Complex64], shape: &[usize], axis: usize, plan: &Arc<dyn Fft<f64>>) {
    let n = shape[axis];
    let stride: usize = shape[..axis].iter().product();
    if stride == 1 {
        data.par_chunks_mut(n * 64).for_each(|c| plan.process(c));
        return;
    }
    // Each outer block is an n × stride matrix; transpose, transform rows,
    // transpose back.
    data.par_chunks_mut(n * stride).for_each(|block| {
        let mut t = vec![Complex64::default(); n * stride];
        for j in 0..n {
            for s in 0..stride {
                t[s * n + j] = block[j * stride + s];
            }
        }
        plan.process(&mut t);
        for j in 0..n {
            for s in 0..stride {
                block[j * stride + s] = t[s * n + j];
            }
        }
    });
}

/// Indices of the `x` and `y` axes in storage order.
pub fn spatial_axes(grid: &Grid) -> Vec<usize> {
    let k = grid.d + if grid.y.is_some() { grid.d } else { 0 };
    (0..k).collect()
}

/// Forward transform of a real field over its spatial axes.
pub fn forward_spatial(field: &Field) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_axes(&mut c, &field.grid.shape(), &spatial_axes(&field.grid), Direction::Forward);
    c
}

/// Inverse spatial transform, returning the real part and the largest
/// imaginary magnitude discarded.
pub fn inverse_spatial_real(grid: &Grid, mut c: Vec<Complex64>) -> (Vec<f64>, f64) {
    fft_axes(&mut c, &grid.shape(), &spatial_axes(grid), Direction::Inverse);
    let imag = c.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    (c.into_iter().map(|v| v.re).collect(), imag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::lp_norm;
    use approx::assert_relative_eq;

    #[test]
    fn round_trip_and_parseval() {
        let g = Grid::xyt(1, [1.0, 2.0, 1.0], [16, 8, 8]).unwrap();
        let f = Field::from_fn(g.clone(), |x, y, t| (3.0 * x[0]).sin() * (y[0] + 0.3).cos() + t * t - x[0] * y[0]);
        let mut c: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let all = [0usize, 1, 2];
        fft_axes(&mut c, &g.shape(), &all, Direction::Forward);
        let energy: f64 = c.iter().map(|v| v.norm_sqr()).sum::<f64>() / g.len() as f64 * g.cell_volume();
        assert_relative_eq!(energy, lp_norm(&f, 2.0).unwrap().powi(2), max_relative = 1e-10);
        fft_axes(&mut c, &g.shape(), &all, Direction::Inverse);
        for (a, b) in c.iter().zip(&f.values) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn axis_transform_matches_naive_dft() {
        let shape = [4usize, 8, 2];
        let mut c: Vec<Complex64> = (0..64).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64).cos())).collect();
        let orig = c.clone();
        fft_axes(&mut c, &shape, &[1], Direction::Forward);
        for o in 0..2 {
            for s in 0..4 {
                for k in 0..8 {
                    let mut acc = Complex64::default();
                    for j in 0..8 {
                        let ang = -2.0 * std::f64::consts::PI * (j * k) as f64 / 8.0;
                        acc += orig[s + 4 * (j + 8 * o)] * Complex64::from_polar(1.0, ang);
                    }
                    assert!((acc - c[s + 4 * (k + 8 * o)]).norm() < 1e-12);
                }
            }
        }
    }
}
