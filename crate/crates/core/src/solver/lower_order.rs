//! Whole-space `L²` norms of `u` and `∇y u` for Gaussian bump sources.
//!
//! A bump emitted at time `t′` is, at time `t`, a Gaussian in each
//! `(x_i, y_i)` pair (see [`SpatialBump::propagated`]). Inner products of
//! Gaussians are Gaussians in the difference of means, so
//! `‖u(t)‖²` reduces to a double integral over emission times.

use super::source::{Gaussian2, GaussianBumps, SpatialBump, GAUSSIAN_REACH};
use crate::error::{invalid, Result};
use crate::quadrature::{composite, graded, pairwise_sum, Rule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerOrderNorms {
    pub u_l2: f64,
    pub grad_y_l2: f64,
    /// End of the time window; it starts before the source does.
    pub t_end: f64,
}

/// `(∫ N1 N2, Σ_i ∫ ∂_{y_i} N1 ∂_{y_i} N2)` for two product Gaussians.
fn gaussian_products(a: &[Gaussian2], b: &[Gaussian2]) -> (f64, f64) {
    let s = [a[0].cov[0] + b[0].cov[0], a[0].cov[1] + b[0].cov[1], a[0].cov[2] + b[0].cov[2]];
    let det = s[0] * s[2] - s[1] * s[1];
    let p = [s[2] / det, -s[1] / det, s[0] / det];
    let norm = 1.0 / (2.0 * PI * det.sqrt());
    let mut h = 1.0;
    let mut grad = 0.0;
    for (ga, gb) in a.iter().zip(b) {
        let dx = ga.mean[0] - gb.mean[0];
        let dy = ga.mean[1] - gb.mean[1];
        h *= norm * (-0.5 * (p[0] * dx * dx + 2.0 * p[1] * dx * dy + p[2] * dy * dy)).exp();
        let py = p[1] * dx + p[2] * dy;
        grad += p[2] - py * py;
    }
    (h, h * grad)
}

/// `‖u‖_{L²(ℝ^{2d} × (−∞, t_end))}` and the same for `∇y u`.
pub fn lower_order_norms(f: &GaussianBumps, t_end: f64) -> Result<LowerOrderNorms> {
    if f.bumps.is_empty() {
        return Ok(LowerOrderNorms { u_l2: 0.0, grad_y_l2: 0.0, t_end });
    }
    let r = GAUSSIAN_REACH;
    let start = f.bumps.iter().map(|b| b.center_t - r * b.sigma_t).fold(f64::INFINITY, f64::min);
    if t_end <= start {
        return invalid("time window ends before the source starts");
    }
    let sigma_min = f.bumps.iter().map(|b| b.sigma_t).fold(f64::INFINITY, f64::min);
    let rule = Rule::gauss_legendre(8);
    let inner = Rule::gauss_legendre(12);
    let (ts, tw) = graded(&rule, start, t_end, 0.25 * sigma_min, 1.1, f64::INFINITY);

    let vals: Vec<(f64, f64)> = ts
        .par_iter()
        .zip(&tw)
        .map(|(&t, &w)| {
            // Emission nodes per bump, with mass and time profile folded in.
            let emitted: Vec<Vec<(f64, Vec<Gaussian2>)>> = f
                .bumps
                .iter()
                .map(|b| {
                    let lo = b.center_t - r * b.sigma_t;
                    let hi = (b.center_t + r * b.sigma_t).min(t);
                    let (n, wn) = composite(&inner, lo, hi, b.sigma_t);
                    n.iter()
                        .zip(&wn)
                        .map(|(tp, wp)| (wp * b.time_profile(*tp) * b.spatial.mass(), propagated(&b.spatial, t - tp)))
                        .collect()
                })
                .collect();
            let (mut uu, mut gg) = (0.0, 0.0);
            for ea in &emitted {
                for eb in &emitted {
                    for (wa, ga) in ea {
                        for (wb, gb) in eb {
                            let (h, g) = gaussian_products(ga, gb);
                            uu += wa * wb * h;
                            gg += wa * wb * g;
                        }
                    }
                }
            }
            (w * uu, w * gg)
        })
        .collect();
    let uu: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let gg: Vec<f64> = vals.iter().map(|v| v.1).collect();
    Ok(LowerOrderNorms { u_l2: pairwise_sum(&uu).max(0.0).sqrt(), grad_y_l2: pairwise_sum(&gg).max(0.0).sqrt(), t_end })
}

fn propagated(b: &SpatialBump, s: f64) -> Vec<Gaussian2> {
    b.propagated(s.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn g(mean: [f64; 2], cov: [f64; 3]) -> Gaussian2 {
        Gaussian2 { mean, cov }
    }

    #[test]
    fn gaussian_inner_products_match_grid_sums() {
        let a = [g([0.3, -0.2], [0.5, 0.1, 0.4])];
        let b = [g([-0.4, 0.5], [0.7, -0.2, 0.3])];
        let (h, gr) = gaussian_products(&a, &b);
        let n = 400;
        let (lo, hi) = (-8.0, 8.0);
        let dx = (hi - lo) / n as f64;
        let (mut hs, mut gs) = (0.0, 0.0);
        let dy_n = |q: &Gaussian2, x: f64, y: f64| {
            let p = q.precision();
            -(p[1] * (x - q.mean[0]) + p[2] * (y - q.mean[1])) * q.density(x, y)
        };
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (lo + (i as f64 + 0.5) * dx, lo + (j as f64 + 0.5) * dx);
                hs += a[0].density(x, y) * b[0].density(x, y);
                gs += dy_n(&a[0], x, y) * dy_n(&b[0], x, y);
            }
        }
        assert_relative_eq!(h, hs * dx * dx, max_relative = 1e-10);
        assert_relative_eq!(gr, gs * dx * dx, max_relative = 1e-10);
    }
}
