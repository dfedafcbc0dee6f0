//! The homogeneous group underlying the Kolmogorov operator.
//!
//! Points are `(x, y, t) ∈ ℝ^d × ℝ^d × ℝ` with law
//! `(x', y', t') ∘ (x, y, t) = (x + x' + t y', y + y', t + t')`, dilations
//! `δ_λ(x, y, t) = (λ³x, λy, λ²t)` and homogeneous dimension `Q = 4d + 2`.

use crate::error::{invalid, Error, Result};
use crate::rng::{self, Estimate, Moments};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// A point of the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

/// Quasi-triangle and lower-triangle constants for [`quasi_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupConstants {
    /// `‖z ∘ z'‖ ≤ c0 (‖z‖ + ‖z'‖)`.
    pub c0: f64,
    /// Threshold ratio: the lower bound holds once `‖z‖ ≥ c1 ‖z'‖`.
    pub c1: f64,
    /// `‖z ∘ z'‖, ‖z' ∘ z‖ ≥ c2 ‖z‖` whenever `‖z‖ ≥ c1 ‖z'‖`.
    pub c2: f64,
}

/// `c0 = 5/3`; with `M = 1/(2 c0²)` the lower bound gives `c1 = 1/M`,
/// `c2 = (1 − c0² M)/c0`.
pub const CONSTANTS: GroupConstants = GroupConstants { c0: 5.0 / 3.0, c1: 50.0 / 9.0, c2: 0.3 };

impl GPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self> {
        if x.is_empty() {
            return invalid("spatial dimension must be at least 1");
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        if !(x.iter().chain(&y).all(|v| v.is_finite()) && t.is_finite()) {
            return invalid("group point has a non-finite coordinate");
        }
        Ok(Self { x, y, t })
    }

    pub fn origin(d: usize) -> Self {
        Self { x: vec![0.0; d], y: vec![0.0; d], t: 0.0 }
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &GPoint) -> Result<GPoint> {
        check_same_d(self, rhs)?;
        let x = (0..self.d()).map(|i| rhs.x[i] + self.x[i] + rhs.t * self.y[i]).collect();
        let y = self.y.iter().zip(&rhs.y).map(|(a, b)| a + b).collect();
        Ok(GPoint { x, y, t: self.t + rhs.t })
    }

    pub fn invert(&self) -> GPoint {
        GPoint {
            x: self.x.iter().zip(&self.y).map(|(x, y)| -x + self.t * y).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            t: -self.t,
        }
    }

    /// `δ_λ(self)`, for `λ > 0`.
    pub fn dilate(&self, lambda: f64) -> Result<GPoint> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("dilation factor must be positive, got {lambda}"));
        }
        let l3 = lambda * lambda * lambda;
        Ok(GPoint {
            x: self.x.iter().map(|v| l3 * v).collect(),
            y: self.y.iter().map(|v| lambda * v).collect(),
            t: lambda * lambda * self.t,
        })
    }

    /// `|x|^{1/3} + |y| + |t|^{1/2}` with Euclidean norms.
    pub fn quasi_norm(&self) -> f64 {
        norm2(&self.x).cbrt() + norm2(&self.y) + self.t.abs().sqrt()
    }
}

fn check_same_d(a: &GPoint, b: &GPoint) -> Result<()> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch { expected: a.d(), got: b.d() });
    }
    Ok(())
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn compose(a: &GPoint, b: &GPoint) -> Result<GPoint> {
    a.compose(b)
}

pub fn invert(z: &GPoint) -> GPoint {
    z.invert()
}

pub fn dilate(z: &GPoint, lambda: f64) -> Result<GPoint> {
    z.dilate(lambda)
}

pub fn quasi_norm(z: &GPoint) -> f64 {
    z.quasi_norm()
}

/// `d(z, w) = ‖w⁻¹ ∘ z‖`, evaluated without forming the composition.
pub fn quasi_distance(z: &GPoint, w: &GPoint) -> Result<f64> {
    check_same_d(z, w)?;
    let dt = z.t - w.t;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for i in 0..z.d() {
        let a = z.x[i] - w.x[i] - dt * w.y[i];
        let b = z.y[i] - w.y[i];
        sx += a * a;
        sy += b * b;
    }
    Ok(sx.sqrt().cbrt() + sy.sqrt() + dt.abs().sqrt())
}

/// Whether `((1 − c0² M)/c0) ‖z‖ ≤ ‖z ∘ zp‖`, the conclusion of the lower
/// triangle inequality under the hypothesis `‖zp‖ ≤ M ‖z‖`.
pub fn lower_triangle_bound(z: &GPoint, zp: &GPoint, m: f64) -> Result<bool> {
    let c0 = CONSTANTS.c0;
    if !(m > 0.0 && m < 1.0 / (c0 * c0)) {
        return invalid(format!("M must lie in (0, 1/c0²), got {m}"));
    }
    let lhs = (1.0 - c0 * c0 * m) / c0 * z.quasi_norm();
    let rhs = z.compose(zp)?.quasi_norm();
    Ok(lhs <= rhs * (1.0 + 1e-12) + 1e-300)
}

/// Homogeneous dimension `4d + 2`.
pub fn homogeneous_dimension(d: usize) -> f64 {
    (4 * d + 2) as f64
}

/// Exact Lebesgue measure of the unit quasi-ball `{‖z‖ < 1}`.
///
/// In radial variables `a = |x|^{1/3}`, `b = |y|`, `c = |t|^{1/2}` the ball
/// is a simplex and the measure is a Dirichlet integral.
pub fn unit_ball_volume(d: usize) -> f64 {
    let df = d as f64;
    let omega = PI.powf(0.5 * df) / gamma(0.5 * df + 1.0);
    12.0 * df * df * omega * omega * gamma(3.0 * df) * gamma(df) / gamma(4.0 * df + 3.0)
}

/// Monte Carlo estimate of `|B(0, δ)| / δ^Q`; zero radius gives zero.
pub fn ball_volume_constant(d: usize, delta: f64, n: usize, seed: u64) -> Result<Estimate> {
    if d == 0 {
        return invalid("spatial dimension must be at least 1");
    }
    if n < 1000 {
        return invalid("ball volume needs at least 1000 samples");
    }
    if delta == 0.0 {
        return Ok(Estimate { value: 0.0, stderr: 0.0 });
    }
    ball_volume(&GPoint::origin(d), delta, n, seed)
}

/// Monte Carlo estimate of `|B(center, δ)| / δ^Q`.
///
/// Samples are drawn uniformly in the bounding box
/// `|x − x0 − (t − t0) y0| < δ³`, `|y − y0| < δ`, `|t − t0| < δ²`, enlarged in
/// `x` to absorb the shear.
pub fn ball_volume(center: &GPoint, delta: f64, n: usize, seed: u64) -> Result<Estimate> {
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid("ball radius must be positive");
    }
    if n == 0 {
        return invalid("sample count must be positive");
    }
    let d = center.d();
    let (d2, d3) = (delta * delta, delta * delta * delta);
    let half_x: Vec<f64> = center.y.iter().map(|y0| d3 + d2 * y0.abs()).collect();
    let box_vol = half_x.iter().map(|h| 2.0 * h).product::<f64>() * (2.0 * delta).powi(d as i32) * 2.0 * d2;
    let scale = box_vol / delta.powf(homogeneous_dimension(d));
    let m = indicator_mc(n, seed, |rng, z: &mut GPoint| {
        for i in 0..d {
            z.x[i] = center.x[i] + half_x[i] * rng.random_range(-1.0..1.0);
            z.y[i] = center.y[i] + delta * rng.random_range(-1.0..1.0);
        }
        z.t = center.t + d2 * rng.random_range(-1.0..1.0);
        quasi_distance(z, center).map(|r| r < delta).unwrap_or(false)
    }, d);
    let e = m.estimate();
    Ok(Estimate { value: e.value * scale, stderr: e.stderr * scale })
}

/// Monte Carlo estimate of `|{z : z⁻¹ ∈ B(0, 1)}|`, which equals the measure
/// of the unit ball because inversion preserves Lebesgue measure.
pub fn inverted_ball_volume(d: usize, n: usize, seed: u64) -> Result<Estimate> {
    if d == 0 || n == 0 {
        return invalid("dimension and sample count must be positive");
    }
    // z⁻¹ = (−x + t y, −y, −t): |x| ≤ |x_inv| + |t||y| < 2 on the set.
    let box_vol = 4f64.powi(d as i32) * 2f64.powi(d as i32) * 2.0;
    let m = indicator_mc(n, seed, |rng, z: &mut GPoint| {
        for i in 0..d {
            z.x[i] = rng.random_range(-2.0..2.0);
            z.y[i] = rng.random_range(-1.0..1.0);
        }
        z.t = rng.random_range(-1.0..1.0);
        z.invert().quasi_norm() < 1.0
    }, d);
    let e = m.estimate();
    Ok(Estimate { value: e.value * box_vol, stderr: e.stderr * box_vol })
}

fn indicator_mc<F>(n: usize, seed: u64, hit: F, d: usize) -> Moments
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut GPoint) -> bool + Sync,
{
    let blocks = n.div_ceil(rng::BLOCK);
    let parts: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, b as u64);
            let count = rng::BLOCK.min(n - b * rng::BLOCK);
            let mut z = GPoint::origin(d);
            let mut m = Moments::default();
            for _ in 0..count {
                m.push(if hit(&mut r, &mut z) { 1.0 } else { 0.0 });
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn point(d: usize) -> impl Strategy<Value = GPoint> {
        (
            proptest::collection::vec(-5.0..5.0f64, d),
            proptest::collection::vec(-5.0..5.0f64, d),
            -5.0..5.0f64,
        )
            .prop_map(|(x, y, t)| GPoint { x, y, t })
    }

    fn close(a: &GPoint, b: &GPoint, tol: f64) -> bool {
        a.x.iter().zip(&b.x).chain(a.y.iter().zip(&b.y)).all(|(p, q)| (p - q).abs() <= tol * (1.0 + p.abs()))
            && (a.t - b.t).abs() <= tol * (1.0 + a.t.abs())
    }

    proptest! {
        #[test]
        fn law_is_associative(a in point(2), b in point(2), c in point(2)) {
            let l = a.compose(&b).unwrap().compose(&c).unwrap();
            let r = a.compose(&b.compose(&c).unwrap()).unwrap();
            prop_assert!(close(&l, &r, 1e-12));
        }

        #[test]
        fn inverse_cancels_on_both_sides(a in point(1)) {
            let o = GPoint::origin(1);
            prop_assert!(close(&a.compose(&a.invert()).unwrap(), &o, 1e-12));
            prop_assert!(close(&a.invert().compose(&a).unwrap(), &o, 1e-12));
        }

        #[test]
        fn dilation_is_an_automorphism(a in point(2), b in point(2), l in 0.1..10.0f64) {
            let lhs = a.compose(&b).unwrap().dilate(l).unwrap();
            let rhs = a.dilate(l).unwrap().compose(&b.dilate(l).unwrap()).unwrap();
            prop_assert!(close(&lhs, &rhs, 1e-11));
        }

        #[test]
        fn norm_is_homogeneous(a in point(2), l in 0.1..10.0f64) {
            let n = a.dilate(l).unwrap().quasi_norm();
            prop_assert!((n - l * a.quasi_norm()).abs() <= 1e-11 * (1.0 + n));
        }

        #[test]
        fn quasi_triangle_inequality(a in point(1), b in point(1)) {
            let lhs = a.compose(&b).unwrap().quasi_norm();
            prop_assert!(lhs <= CONSTANTS.c0 * (a.quasi_norm() + b.quasi_norm()) * (1.0 + 1e-12));
        }

        #[test]
        fn lower_triangle_inequality(a in point(2), b in point(2), shrink in 0.0..1.0f64) {
            // Scale b so that ‖a‖ ≥ c1 ‖b‖.
            let nb = b.quasi_norm();
            prop_assume!(nb > 1e-9);
            let b = b.dilate(shrink * a.quasi_norm() / (CONSTANTS.c1 * nb) + 1e-12).unwrap();
            let na = a.quasi_norm();
            prop_assert!(a.compose(&b).unwrap().quasi_norm() >= CONSTANTS.c2 * na * (1.0 - 1e-12));
            prop_assert!(b.compose(&a).unwrap().quasi_norm() >= CONSTANTS.c2 * na * (1.0 - 1e-12));
        }

        #[test]
        fn distance_matches_group_route(a in point(2), b in point(2)) {
            let direct = quasi_distance(&a, &b).unwrap();
            let via = b.invert().compose(&a).unwrap().quasi_norm();
            prop_assert!((direct - via).abs() <= 1e-11 * (1.0 + via));
        }

        #[test]
        fn distance_is_left_invariant(a in point(1), b in point(1), g in point(1)) {
            let d0 = quasi_distance(&a, &b).unwrap();
            let d1 = quasi_distance(&g.compose(&a).unwrap(), &g.compose(&b).unwrap()).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0));
        }
    }

    #[test]
    fn lower_bound_oracle_examples() {
        let z = GPoint::new(vec![1.0], vec![-2.0], 0.5).unwrap();
        let m = 0.3 / (CONSTANTS.c0 * CONSTANTS.c0);
        assert!(lower_triangle_bound(&z, &GPoint::origin(1), m).unwrap());
        assert!(lower_triangle_bound(&z, &z, 2.0).is_err());
        assert_eq!(ball_volume_constant(1, 0.0, 1000, 1).unwrap().value, 0.0);
    }

    #[test]
    fn spec_examples() {
        let a = GPoint::new(vec![1.0], vec![2.0], 3.0).unwrap();
        let b = GPoint::new(vec![4.0], vec![5.0], 6.0).unwrap();
        assert_eq!(a.compose(&b).unwrap(), GPoint::new(vec![17.0], vec![7.0], 9.0).unwrap());
        assert_eq!(b.invert(), GPoint::new(vec![26.0], vec![-5.0], -6.0).unwrap());
        let one = GPoint::new(vec![1.0], vec![1.0], 1.0).unwrap();
        assert_eq!(one.dilate(2.0).unwrap(), GPoint::new(vec![8.0], vec![2.0], 4.0).unwrap());
        assert_eq!(GPoint::new(vec![8.0], vec![2.0], 9.0).unwrap().quasi_norm(), 7.0);
        let d = quasi_distance(&GPoint::new(vec![17.0], vec![7.0], 9.0).unwrap(), &a).unwrap();
        assert_relative_eq!(d, 4f64.cbrt() + 5.0 + 6f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn constants_follow_from_c0() {
        let c0 = CONSTANTS.c0;
        let m = 1.0 / (2.0 * c0 * c0);
        assert_relative_eq!(CONSTANTS.c1, 1.0 / m, max_relative = 1e-15);
        assert_relative_eq!(CONSTANTS.c2, (1.0 - c0 * c0 * m) / c0, max_relative = 1e-15);
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        assert!(matches!(GPoint::new(vec![0.0], vec![0.0, 1.0], 0.0), Err(Error::DimensionMismatch { .. })));
        assert!(GPoint::new(vec![f64::NAN], vec![0.0], 0.0).is_err());
        assert!(GPoint::origin(1).dilate(0.0).is_err());
    }

    #[test]
    fn unit_ball_volume_matches_nested_quadrature() {
        // d = 1: ∫∫ 2·2·(1 − |y| − √|t|)³ over |y| + √|t| < 1, times 2.
        let r = crate::quadrature::Rule::gauss_legendre(30);
        let v = r.integrate(0.0, 1.0, |c| {
            // t = c², dt = 2c dc, two signs of t.
            let inner = r.integrate(0.0, 1.0 - c, |b| 2.0 * 2.0 * (1.0 - b - c).powi(3));
            2.0 * 2.0 * c * inner
        });
        assert_relative_eq!(unit_ball_volume(1), v, max_relative = 1e-10);
    }

    #[test]
    fn ball_volume_is_translation_invariant_and_homogeneous() {
        let exact = unit_ball_volume(1);
        let c = GPoint::new(vec![0.4], vec![1.7], -0.3).unwrap();
        for (z, delta) in [(GPoint::origin(1), 1.0), (c, 0.6)] {
            let e = ball_volume(&z, delta, 400_000, 11).unwrap();
            assert!((e.value - exact).abs() < 5.0 * e.stderr + 1e-3, "{e:?} vs {exact}");
        }
        let e = inverted_ball_volume(1, 400_000, 12).unwrap();
        assert!((e.value - exact).abs() < 5.0 * e.stderr, "{e:?} vs {exact}");
    }
}
