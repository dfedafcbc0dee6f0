//! The fundamental solution of `∂t − Δy + y·∇x` and its derived kernels.
//!
//! `γ(x, y, t)` is the transition density of `(X_t, Y_t)` with `dY = √2 dW`,
//! `dX = Y dt`, started at the origin:
//!
//! `γ = (3/(4π²t⁴))^{d/2} exp(−(3|x|² − 3t x·y + t²|y|²)/t³)` for `t > 0`.
//!
//! Its Fourier transform in `(x, y)` is `exp(−F(ξ, η, t))` with
//! `F = (t³|ξ|² + 3t² ξ·η + 3t|η|²)/3`.

use crate::discretization::transform::{fft_axes, Direction};
use crate::discretization::{Field, Grid};
use crate::error::{invalid, Error, Result};
use crate::geometry::{norm2, GPoint};
use crate::quadrature::Rule;
use crate::rng;
use crate::special::frac_laplacian_of_gaussian;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Order of the fractional derivative in `x` that pairs with `Δy`.
pub const FRAC_ORDER: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelId {
    Gamma,
    GammaGradY,
    Gamma1,
    Gamma2,
}

impl KernelId {
    pub fn name(self) -> &'static str {
        match self {
            KernelId::Gamma => "gamma",
            KernelId::GammaGradY => "gamma_grad_y",
            KernelId::Gamma1 => "gamma1",
            KernelId::Gamma2 => "gamma2",
        }
    }
}

/// `γ` from coordinate slices; zero for `t ≤ 0`.
#[inline]
pub fn gamma_at(x: &[f64], y: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let d = x.len() as f64;
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        xx += x[i] * x[i];
        xy += x[i] * y[i];
        yy += y[i] * y[i];
    }
    let t2 = t * t;
    let q = (3.0 * xx - 3.0 * t * xy + t2 * yy) / (t2 * t);
    (3.0 / (4.0 * PI * PI * t2 * t2)).powf(0.5 * d) * (-q).exp()
}

/// `γ1 = Δy γ` from coordinate slices; zero for `t < 0`. The caller must
/// exclude `t = 0`.
#[inline]
pub fn gamma1_at(x: &[f64], y: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let g = gamma_at(x, y, t);
    if g == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..x.len() {
        let a = 2.0 * t * y[i] - 3.0 * x[i];
        s += a * a;
    }
    let t2 = t * t;
    g * (s / (t2 * t2) - 2.0 * x.len() as f64 / t)
}

/// `γ2 = |∇x|^{2/3} γ` from coordinate slices; zero for `t ≤ 0`.
///
/// Completing the square, `γ = N(y; 0, 2t) · N(x; t y/2, t³/6)`, so the
/// fractional derivative acts on a single Gaussian in `x`.
#[inline]
pub fn gamma2_at(x: &[f64], y: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let d = x.len();
    let df = d as f64;
    let mut yy = 0.0;
    let mut rr = 0.0;
    for i in 0..d {
        yy += y[i] * y[i];
        let r = x[i] - 0.5 * t * y[i];
        rr += r * r;
    }
    let y_density = (4.0 * PI * t).powf(-0.5 * df) * (-yy / (4.0 * t)).exp();
    if y_density == 0.0 {
        return 0.0;
    }
    let var = t * t * t / 6.0;
    let x_norm = (2.0 * PI * var).powf(-0.5 * df);
    y_density * x_norm * frac_laplacian_of_gaussian(d, FRAC_ORDER, var.sqrt(), rr.sqrt())
}

/// `∇y γ = −γ (2t y − 3x)/t²`.
pub fn gamma_grad_y_at(x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    let g = gamma_at(x, y, t);
    if g == 0.0 {
        return vec![0.0; x.len()];
    }
    (0..x.len()).map(|i| -g * (2.0 * t * y[i] - 3.0 * x[i]) / (t * t)).collect()
}

pub fn gamma(z: &GPoint) -> f64 {
    gamma_at(&z.x, &z.y, z.t)
}

pub fn gamma_grad_y(z: &GPoint) -> Vec<f64> {
    gamma_grad_y_at(&z.x, &z.y, z.t)
}

pub fn gamma1(z: &GPoint) -> Result<f64> {
    if z.t == 0.0 {
        return Err(Error::Singular);
    }
    Ok(gamma1_at(&z.x, &z.y, z.t))
}

pub fn gamma2(z: &GPoint) -> Result<f64> {
    if z.t <= 0.0 {
        return Err(Error::Domain(format!("γ2 is evaluated only for t > 0, got t = {}", z.t)));
    }
    Ok(gamma2_at(&z.x, &z.y, z.t))
}

/// `F(ξ, η, t) = (t³|ξ|² + 3t² ξ·η + 3t|η|²)/3`.
pub fn symbol_f(xi: &[f64], eta: &[f64], t: f64) -> Result<f64> {
    if xi.len() != eta.len() {
        return Err(Error::DimensionMismatch { expected: xi.len(), got: eta.len() });
    }
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for i in 0..xi.len() {
        a += xi[i] * xi[i];
        b += xi[i] * eta[i];
        c += eta[i] * eta[i];
    }
    Ok((t * t * t * a + 3.0 * t * t * b + 3.0 * t * c) / 3.0)
}

/// Box and resolution of the lattice used by the transform route for `γ2`,
/// expressed at `t = 1` and scaled parabolically with `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeControls {
    pub half_x: f64,
    pub half_y: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for LatticeControls {
    fn default() -> Self {
        // The x box must be wide: γ2 decays only like |x|^{-5/3}, so periodic
        // images sit at relative size (2 Lx)^{-5/3}.
        Self { half_x: 1024.0, half_y: 16.0, nx: 8192, ny: 128 }
    }
}

/// Evaluators for one spatial dimension plus numerical controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFamily {
    pub d: usize,
    pub lattice: LatticeControls,
    /// Gauss–Hermite nodes per direction in the Chapman–Kolmogorov check.
    /// Equal time splits converge slowly: 40 nodes leave about `10⁻⁴`
    /// relative error at `t1 = t2`, 80 nodes about `10⁻⁹`.
    pub ck_nodes: usize,
}

impl KernelFamily {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("spatial dimension must be at least 1");
        }
        Ok(Self { d, lattice: LatticeControls::default(), ck_nodes: if d == 1 { 80 } else { 40 } })
    }

    fn check(&self, z: &GPoint) -> Result<()> {
        if z.d() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: z.d() });
        }
        Ok(())
    }

    pub fn gamma(&self, z: &GPoint) -> Result<f64> {
        self.check(z)?;
        Ok(gamma(z))
    }

    pub fn gamma1(&self, z: &GPoint) -> Result<f64> {
        self.check(z)?;
        gamma1(z)
    }

    pub fn gamma2(&self, z: &GPoint) -> Result<f64> {
        self.check(z)?;
        gamma2(z)
    }

    /// `γ2` at time `t` on an `(x, y)` lattice, by a full inverse transform
    /// of `|ξ|^{2/3} e^{−F}`. Only `d = 1` is practical.
    pub fn gamma2_lattice(&self, t: f64) -> Result<Field> {
        if self.d != 1 {
            return invalid("the lattice route for γ2 is implemented for d = 1");
        }
        if t <= 0.0 {
            return Err(Error::Domain("γ2 lattice needs t > 0".into()));
        }
        let c = self.lattice;
        let grid = Grid::xy(1, [c.half_x * t.powf(1.5), c.half_y * t.sqrt()], [c.nx, c.ny])?;
        let xi = grid.x.frequencies();
        let eta = grid.y.unwrap().frequencies();
        let (nx, ny) = (c.nx, c.ny);
        let mut spec = vec![Complex64::default(); nx * ny];
        spec.par_chunks_mut(nx).enumerate().for_each(|(l, row)| {
            for (m, v) in row.iter_mut().enumerate() {
                if m == nx / 2 || l == ny / 2 {
                    continue;
                }
                let f = (t * t * t * xi[m] * xi[m] + 3.0 * t * t * xi[m] * eta[l] + 3.0 * t * eta[l] * eta[l]) / 3.0;
                // Nodes start at −L, which contributes (−1)^{m + l}.
                let sign = if (grid.x.mode(m) + grid.y.unwrap().mode(l)) % 2 == 0 { 1.0 } else { -1.0 };
                *v = Complex64::new(sign * xi[m].abs().powf(FRAC_ORDER) * (-f).exp(), 0.0);
            }
        });
        fft_axes(&mut spec, &[nx, ny], &[0, 1], Direction::Inverse);
        // Inverse DFT already divides by nx·ny; continuous inverse needs
        // (Δξ Δη)/(2π)² · nx·ny = nx·ny / (4 Lx Ly).
        let scale = (nx * ny) as f64 / (4.0 * grid.x.half_length * grid.y.unwrap().half_length);
        let values = spec.iter().map(|v| v.re * scale).collect();
        Field::new(grid, values)
    }

    /// `|γ(z) − ∫ γ(w⁻¹∘z) γ(w) dw|` with `w` on the slice `t(w) = t1`.
    ///
    /// Gauss–Hermite nodes follow the Gaussian structure of whichever factor
    /// is narrower; the change of variables `w ↦ w⁻¹∘z` has unit Jacobian.
    pub fn chapman_kolmogorov_check(&self, t1: f64, t2: f64, z: &GPoint) -> Result<f64> {
        self.check(z)?;
        if !(t1 > 0.0 && t2 > 0.0) {
            return invalid("both time steps must be positive");
        }
        if (z.t - (t1 + t2)).abs() > 1e-12 * (1.0 + z.t.abs()) {
            return invalid("t(z) must equal t1 + t2");
        }
        let direct = gamma(z);
        let integral = if t1 <= t2 {
            self.hermite_expectation(t1, |w| gamma(&w.invert().compose(z).expect("same d")))
        } else {
            self.hermite_expectation(t2, |v| gamma(&z.compose(&v.invert()).expect("same d")))
        };
        Ok((direct - integral).abs())
    }

    /// `E[g(W)]` with `W ~ γ(·, ·, s)`, by tensor Gauss–Hermite in the
    /// conditional coordinates `W_y ~ N(0, 2s)`, `W_x | W_y ~ N(s W_y/2, s³/6)`.
    fn hermite_expectation(&self, s: f64, g: impl Fn(&GPoint) -> f64) -> f64 {
        let d = self.d;
        let rule = Rule::gauss_hermite(self.ck_nodes);
        let n = rule.len();
        let sy = (2.0 * 2.0 * s).sqrt();
        let sx = (2.0 * s * s * s / 6.0).sqrt();
        let total = n.pow(2 * d as u32);
        let mut w = GPoint::origin(d);
        w.t = s;
        let mut acc = 0.0;
        let mut idx = vec![0usize; 2 * d];
        for k in 0..total {
            Grid::unflatten(k, n, &mut idx);
            let mut weight = 1.0;
            for i in 0..d {
                let (a, b) = (idx[i], idx[d + i]);
                w.y[i] = sy * rule.nodes[b];
                w.x[i] = 0.5 * s * w.y[i] + sx * rule.nodes[a];
                weight *= rule.weights[a] * rule.weights[b] / PI;
            }
            acc += weight * g(&w);
        }
        acc
    }

    pub fn scan_bound(&self, kernel: KernelId, n_samples: usize, seed: u64) -> Result<BoundScanReport> {
        let weight = match kernel {
            KernelId::Gamma => WeightExponents { norm: 4.0 * self.d as f64, parabolic: 0.0 },
            KernelId::GammaGradY => WeightExponents { norm: 4.0 * self.d as f64 + 1.0, parabolic: 0.0 },
            KernelId::Gamma1 => WeightExponents { norm: 4.0 * self.d as f64 + 2.0, parabolic: 0.0 },
            KernelId::Gamma2 => WeightExponents { norm: 3.0 * self.d as f64 + 2.0, parabolic: self.d as f64 },
        };
        self.scan_bound_weighted(kernel, weight, n_samples, seed)
    }

    /// Sampled supremum of `‖z‖^a (|y| + |t|^{1/2})^b |K(z)|`.
    ///
    /// Points are drawn uniformly in the unit box with `t ∈ [10⁻³, 1]`,
    /// projected to the unit shell by a dilation, then moved along their
    /// dilation orbit to a log-uniform scale in `[10⁻², 10²]`. All kernels
    /// vanish for `t ≤ 0`, so only positive times are sampled.
    pub fn scan_bound_weighted(
        &self,
        kernel: KernelId,
        weight: WeightExponents,
        n_samples: usize,
        seed: u64,
    ) -> Result<BoundScanReport> {
        if n_samples < 10_000 {
            return invalid("bound scans need at least 10^4 samples");
        }
        let tenth = n_samples / 10;
        let blocks = n_samples.div_ceil(rng::BLOCK);
        let d = self.d;
        let block_max: Vec<(f64, f64)> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut r = rng::stream(seed, b as u64);
                let start = b * rng::BLOCK;
                let count = rng::BLOCK.min(n_samples - start);
                let (mut early, mut all) = (0.0f64, 0.0f64);
                let mut z = GPoint::origin(d);
                for k in 0..count {
                    let v = sample_scan_point(&mut r, &mut z);
                    let val = weighted_kernel(kernel, weight, &v);
                    all = all.max(val);
                    if start + k < tenth {
                        early = early.max(val);
                    }
                }
                (early, all)
            })
            .collect();
        let early = block_max.iter().fold(0.0f64, |m, v| m.max(v.0));
        let sup = block_max.iter().fold(0.0f64, |m, v| m.max(v.1));
        let stable = sup.is_finite() && sup < 2.0 * early;
        Ok(BoundScanReport { kernel, weight, supremum: sup, sample_count: n_samples, seed, stable })
    }
}

fn sample_scan_point(r: &mut impl Rng, z: &mut GPoint) -> GPoint {
    loop {
        for i in 0..z.d() {
            z.x[i] = r.random_range(-1.0..1.0);
            z.y[i] = r.random_range(-1.0..1.0);
        }
        z.t = r.random_range(0.0..1.0);
        let n = z.quasi_norm();
        let u = z.dilate(1.0 / n).expect("positive norm");
        if u.t < 1e-3 {
            continue;
        }
        let lambda = 10f64.powf(r.random_range(-2.0..2.0));
        return u.dilate(lambda).expect("positive scale");
    }
}

/// `‖z‖^a (|y| + |t|^{1/2})^b |K(z)|`.
pub fn weighted_kernel(kernel: KernelId, w: WeightExponents, z: &GPoint) -> f64 {
    let k = match kernel {
        KernelId::Gamma => gamma(z),
        KernelId::GammaGradY => norm2(&gamma_grad_y(z)),
        KernelId::Gamma1 => gamma1_at(&z.x, &z.y, z.t),
        KernelId::Gamma2 => gamma2_at(&z.x, &z.y, z.t),
    };
    let par = norm2(&z.y) + z.t.abs().sqrt();
    z.quasi_norm().powf(w.norm) * par.powf(w.parabolic) * k.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightExponents {
    /// Exponent on the full quasi-norm.
    pub norm: f64,
    /// Exponent on `|y| + |t|^{1/2}`.
    pub parabolic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundScanReport {
    pub kernel: KernelId,
    pub weight: WeightExponents,
    pub supremum: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub stable: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(x: f64, y: f64, t: f64) -> GPoint {
        GPoint::new(vec![x], vec![y], t).unwrap()
    }

    #[test]
    fn values_at_the_unit_time_origin() {
        assert_relative_eq!(gamma(&p(0.0, 0.0, 1.0)), 3f64.sqrt() / (2.0 * PI), max_relative = 1e-15);
        assert_relative_eq!(gamma1(&p(0.0, 0.0, 1.0)).unwrap(), -3f64.sqrt() / PI, max_relative = 1e-15);
        assert_eq!(gamma(&p(1.0, 2.0, -1.0)), 0.0);
        assert_eq!(gamma1(&p(1.0, 2.0, -1.0)).unwrap(), 0.0);
        assert!(matches!(gamma1(&p(1.0, 0.0, 0.0)), Err(Error::Singular)));
        assert!(gamma2(&p(1.0, 0.0, 0.0)).is_err());
        assert_relative_eq!(symbol_f(&[1.0], &[1.0], 1.0).unwrap(), 7.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn coercivity_constant_is_sharp() {
        // Along the minimising eigenvector the ratio is (4 − √13)/6 < 1/12.
        let lam = (4.0 - 13f64.sqrt()) / 2.0;
        let (xi, eta) = (1.0, -(1.0 - lam) / 1.5);
        let ratio = symbol_f(&[xi], &[eta], 1.0).unwrap() / (xi * xi + eta * eta);
        assert_relative_eq!(ratio, lam / 3.0, max_relative = 1e-12);
        assert!(ratio < 1.0 / 12.0);
    }

    proptest! {
        #[test]
        fn homogeneity(x in -2.0..2.0f64, y in -2.0..2.0f64, t in 0.1..2.0f64, l in 0.2..5.0f64) {
            let z = p(x, y, t);
            let zl = z.dilate(l).unwrap();
            let g = gamma(&z);
            prop_assume!(g > 1e-200);
            prop_assert!((gamma(&zl) - l.powi(-4) * g).abs() <= 1e-11 * l.powi(-4) * g);
            let g1 = gamma1(&z).unwrap();
            prop_assert!((gamma1(&zl).unwrap() - l.powi(-6) * g1).abs() <= 1e-10 * l.powi(-6) * g.max(g1.abs()));
            let g2 = gamma2(&z).unwrap();
            prop_assert!((gamma2(&zl).unwrap() - l.powi(-6) * g2).abs() <= 1e-10 * l.powi(-6) * g2.abs().max(1e-300) + 1e-300);
        }

        #[test]
        fn symbol_is_coercive(xi in -5.0..5.0f64, eta in -5.0..5.0f64, t in 0.01..5.0f64) {
            // In (t^{3/2}ξ, t^{1/2}η) the form has matrix [[1, 3/2], [3/2, 3]]/3,
            // whose smallest eigenvalue is (4 − √13)/6.
            let c = (4.0 - 13f64.sqrt()) / 6.0;
            let f = symbol_f(&[xi], &[eta], t).unwrap();
            prop_assert!(f >= c * (t.powi(3) * xi * xi + t * eta * eta) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn gamma1_matches_finite_differences() {
        let h = 1e-4;
        for &(x, y, t) in &[(0.3, -0.2, 0.7), (1.0, 1.5, 1.2), (-0.5, 0.1, 0.5)] {
            let fd = (gamma(&p(x, y + h, t)) - 2.0 * gamma(&p(x, y, t)) + gamma(&p(x, y - h, t))) / (h * h);
            assert_relative_eq!(gamma1(&p(x, y, t)).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn gamma2_has_zero_x_mean() {
        // The x tail decays like |x|^{-5/3}; integrate the far part of the
        // tail with its exact asymptotic form.
        let rule = Rule::gauss_legendre(20);
        let (y, t) = (0.4, 1.0);
        let (nodes, weights) = crate::quadrature::composite(&rule, -200.0, 200.0, 0.1);
        let inner: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * gamma2_at(&[*x], &[y], t)).sum();
        let marginal = (4.0 * PI * t).powf(-0.5) * (-y * y / (4.0 * t)).exp();
        let s = FRAC_ORDER;
        let c = -statrs::function::gamma::gamma(1.0 + s) * (PI * s / 2.0).sin() / PI;
        // ∫_{|x|>X} c |x|^{-1-s} = 2 c X^{-s}/s.
        let tail = 2.0 * marginal * c * 200f64.powf(-s) / s;
        assert!((inner + tail).abs() < 1e-4, "inner={inner} tail={tail}");
    }
}
