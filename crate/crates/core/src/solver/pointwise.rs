//! `u(z) = ∫_{−∞}^t ∫ f(z′) Γ(z, z′) dz′` by nested quadrature.
//!
//! For a lag `s = t − t′` the spatial integral is a Gaussian mollification
//! of `f(·, t′)`: `y′` is integrated over `±8√(2s)` around `y`, then `x′`
//! over `±8√(s³/6)` around the conditional mean. Panels never exceed the
//! source feature scale or the kernel width.

use super::source::{Source, SupportBox};
use super::spectral::SourceTerm;
use crate::error::{invalid, Error, Result};
use crate::geometry::GPoint;
use crate::quadrature::{composite, graded, pairwise_sum, Rule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseControls {
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Relative tolerance on the coarse/fine difference.
    pub rtol: f64,
    /// Absolute floor for the tolerance.
    pub atol: f64,
}

impl Default for PointwiseControls {
    fn default() -> Self {
        Self { nodes: 8, rtol: 1e-6, atol: 1e-12 }
    }
}

const REACH: f64 = 8.0;

/// Evaluates the solution at `z`; the error estimate compares the result
/// with one computed on panels of half the width.
pub fn eval_pointwise(f: SourceTerm, z: &GPoint, controls: &PointwiseControls) -> Result<f64> {
    let src = match f {
        SourceTerm::Callable(s) => s,
        SourceTerm::Sampled(_) => return invalid("pointwise evaluation needs a callable source"),
    };
    if src.d() != z.d() {
        return Err(Error::DimensionMismatch { expected: src.d(), got: z.d() });
    }
    let rule = Rule::gauss_legendre(controls.nodes);
    let coarse = integrate(src, z, &rule, 1.0);
    let fine = integrate(src, z, &rule, 0.5);
    let err = (fine - coarse).abs();
    let requested = controls.rtol * fine.abs() + controls.atol;
    if err > requested {
        return Err(Error::Quadrature { achieved: err, requested });
    }
    Ok(fine)
}

fn integrate(src: &dyn Source, z: &GPoint, rule: &Rule, refine: f64) -> f64 {
    let sb = src.support();
    let scale = src.feature_scale();
    let s_lo = (z.t - sb.t.1).max(0.0);
    let s_hi = z.t - sb.t.0;
    if s_hi <= 0.0 {
        return 0.0;
    }
    // Near zero lag the mollified source changes on the diffusive and
    // transport time scales of the smallest feature; later, on its own.
    let ymax = z.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let first = scale.t.min(scale.y * scale.y).min(scale.x.powf(2.0 / 3.0)).min(scale.x / (1.0 + ymax));
    let (s_nodes, s_weights) = graded(rule, s_lo, s_hi, first * refine, 1.25, scale.t * refine);
    let parts: Vec<f64> = s_nodes
        .par_iter()
        .zip(&s_weights)
        .map(|(&s, &w)| w * mollified(src, &sb, z, s, rule, refine))
        .collect();
    pairwise_sum(&parts)
}

/// `∫ f(x′, y′, t − s) γ(x − x′ − s y′, y − y′, s) dx′ dy′`.
fn mollified(src: &dyn Source, sb: &SupportBox, z: &GPoint, s: f64, rule: &Rule, refine: f64) -> f64 {
    let d = z.d();
    let scale = src.feature_scale();
    let t = z.t - s;
    if s <= 0.0 {
        return src.eval(&z.x, &z.y, t);
    }
    let sy = (2.0 * s).sqrt();
    let sx = (s * s * s / 6.0).sqrt();
    let hy = 2.0 * scale.y.min(sy) * refine;
    let hx = 2.0 * scale.x.min(sx) * refine;

    // y′ nodes per component, with the y-marginal density folded in.
    let mut ys: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(d);
    for i in 0..d {
        let lo = (z.y[i] - REACH * sy).max(sb.y[i].0);
        let hi = (z.y[i] + REACH * sy).min(sb.y[i].1);
        let (n, mut w) = composite(rule, lo, hi, hy);
        if n.is_empty() {
            return 0.0;
        }
        for (yn, wn) in n.iter().zip(w.iter_mut()) {
            let a = z.y[i] - yn;
            *wn *= (-(a * a) / (4.0 * s)).exp() / (4.0 * PI * s).sqrt();
        }
        ys.push((n, w));
    }

    let mut acc = 0.0;
    let mut yi = vec![0usize; d];
    let mut yv = vec![0.0; d];
    let mut xs: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); d];
    let mut xv = vec![0.0; d];
    let mut xi = vec![0usize; d];
    'outer: loop {
        let mut wy = 1.0;
        let mut empty = false;
        for i in 0..d {
            yv[i] = ys[i].0[yi[i]];
            wy *= ys[i].1[yi[i]];
            let c = z.x[i] - s * yv[i] - 0.5 * s * (z.y[i] - yv[i]);
            let lo = (c - REACH * sx).max(sb.x[i].0);
            let hi = (c + REACH * sx).min(sb.x[i].1);
            let (n, mut w) = composite(rule, lo, hi, hx);
            for (xn, wn) in n.iter().zip(w.iter_mut()) {
                let a = xn - c;
                *wn *= (-(a * a) / (2.0 * sx * sx)).exp() / (2.0 * PI * sx * sx).sqrt();
            }
            empty |= n.is_empty();
            xs[i] = (n, w);
        }
        if !empty {
            xi.iter_mut().for_each(|v| *v = 0);
            loop {
                let mut w = wy;
                for i in 0..d {
                    xv[i] = xs[i].0[xi[i]];
                    w *= xs[i].1[xi[i]];
                }
                acc += w * src.eval(&xv, &yv, t);
                if !advance(&mut xi, |i| xs[i].0.len()) {
                    break;
                }
            }
        }
        if !advance(&mut yi, |i| ys[i].0.len()) {
            break 'outer;
        }
    }
    acc
}

/// Odometer increment; returns `false` after the last index.
fn advance(idx: &mut [usize], len: impl Fn(usize) -> usize) -> bool {
    for i in 0..idx.len() {
        idx[i] += 1;
        if idx[i] < len(i) {
            return true;
        }
        idx[i] = 0;
    }
    false
}
