//! Source terms: callables with a declared support box, and Gaussian bump
//! superpositions with closed-form transforms and propagation.

use crate::error::{invalid, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Axis-aligned box `Π [lo, hi]` over `x`, `y` and `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub x: Vec<(f64, f64)>,
    pub y: Vec<(f64, f64)>,
    pub t: (f64, f64),
}

impl SupportBox {
    pub fn contains(&self, x: &[f64], y: &[f64], t: f64) -> bool {
        t >= self.t.0
            && t <= self.t.1
            && x.iter().zip(&self.x).all(|(v, r)| *v >= r.0 && *v <= r.1)
            && y.iter().zip(&self.y).all(|(v, r)| *v >= r.0 && *v <= r.1)
    }
}

/// Smallest length scale of variation along each group of variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// A space-time source `f(x, y, t)`.
pub trait Source: Sync {
    fn d(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64], t: f64) -> f64;
    fn support(&self) -> SupportBox;
    fn feature_scale(&self) -> FeatureScale;

    /// Whether [`Source::sheared_transform`] is implemented.
    fn has_closed_transform(&self) -> bool {
        false
    }

    /// Writes `f̂(ξ, η − a ξ, t)`, the `(x, y)` transform of
    /// `f(X + a y, y, t)`, on the frequency lattice `xi^d × eta^d` in storage
    /// order. Returns `false` when no closed form is available or the source
    /// vanishes at `t` (in which case `out` is untouched).
    fn sheared_transform(&self, _t: f64, _shear: f64, _xi: &[f64], _eta: &[f64], _out: &mut [Complex64]) -> bool {
        false
    }
}

/// A callable with a declared support box.
pub struct CallableSource<F> {
    pub d: usize,
    pub f: F,
    pub support: SupportBox,
    pub scale: FeatureScale,
}

impl<F: Fn(&[f64], &[f64], f64) -> f64 + Sync> Source for CallableSource<F> {
    fn d(&self) -> usize {
        self.d
    }
    fn eval(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        if self.support.contains(x, y, t) {
            (self.f)(x, y, t)
        } else {
            0.0
        }
    }
    fn support(&self) -> SupportBox {
        self.support.clone()
    }
    fn feature_scale(&self) -> FeatureScale {
        self.scale
    }
}

/// Half-width of the box treated as the support of a Gaussian, in units of
/// its standard deviation (`e^{-32} ≈ 10^{-14}`).
pub const GAUSSIAN_REACH: f64 = 8.0;

/// `A exp(−|x − cx|²/(2σx²) − |y − cy|²/(2σy²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialBump {
    pub amplitude: f64,
    pub center_x: Vec<f64>,
    pub center_y: Vec<f64>,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl SpatialBump {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..x.len() {
            let a = x[i] - self.center_x[i];
            let b = y[i] - self.center_y[i];
            e += a * a / (2.0 * self.sigma_x * self.sigma_x) + b * b / (2.0 * self.sigma_y * self.sigma_y);
        }
        self.amplitude * (-e).exp()
    }

    /// `∫ f dx dy`.
    pub fn mass(&self) -> f64 {
        self.amplitude * (2.0 * PI * self.sigma_x * self.sigma_y).powi(self.center_x.len() as i32)
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.center_x.len() != d || self.center_y.len() != d {
            return invalid("bump centre has the wrong dimension");
        }
        if !(self.sigma_x > 0.0 && self.sigma_y > 0.0) || !self.amplitude.is_finite() {
            return invalid("bump widths must be positive and the amplitude finite");
        }
        Ok(())
    }

    /// The bump pushed forward by the kernel at lag `s`: a Gaussian in
    /// each `(x_i, y_i)` pair with the returned mean and covariance.
    pub fn propagated(&self, s: f64) -> Vec<Gaussian2> {
        let (vx, vy) = (self.sigma_x * self.sigma_x, self.sigma_y * self.sigma_y);
        let cov = [
            vx + s * s * vy + 2.0 * s * s * s / 3.0,
            s * vy + s * s,
            vy + 2.0 * s,
        ];
        (0..self.center_x.len())
            .map(|i| Gaussian2 { mean: [self.center_x[i] + s * self.center_y[i], self.center_y[i]], cov })
            .collect()
    }
}

/// A normalised Gaussian density on `ℝ²` with covariance `[[a, b], [b, c]]`
/// stored as `[a, b, c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2 {
    pub mean: [f64; 2],
    pub cov: [f64; 3],
}

impl Gaussian2 {
    pub fn det(&self) -> f64 {
        self.cov[0] * self.cov[2] - self.cov[1] * self.cov[1]
    }

    /// Precision matrix `[p_xx, p_xy, p_yy]`.
    pub fn precision(&self) -> [f64; 3] {
        let det = self.det();
        [self.cov[2] / det, -self.cov[1] / det, self.cov[0] / det]
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        let p = self.precision();
        let (a, b) = (x - self.mean[0], y - self.mean[1]);
        let q = p[0] * a * a + 2.0 * p[1] * a * b + p[2] * b * b;
        (-0.5 * q).exp() / (2.0 * PI * self.det().sqrt())
    }
}

/// A space-time Gaussian bump: a spatial bump times `exp(−(t−ct)²/(2σt²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub spatial: SpatialBump,
    pub center_t: f64,
    pub sigma_t: f64,
}

impl GaussianBump {
    pub fn time_profile(&self, t: f64) -> f64 {
        let a = (t - self.center_t) / self.sigma_t;
        (-0.5 * a * a).exp()
    }
}

/// A finite superposition of space-time Gaussian bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBumps {
    pub d: usize,
    pub bumps: Vec<GaussianBump>,
}

impl GaussianBumps {
    pub fn new(d: usize, bumps: Vec<GaussianBump>) -> Result<Self> {
        for b in &bumps {
            b.spatial.validate(d)?;
            if !(b.sigma_t > 0.0) {
                return invalid("bump time width must be positive");
            }
        }
        Ok(Self { d, bumps })
    }

    /// `λ² f ∘ δ_λ`.
    pub fn dilated(&self, lambda: f64) -> Self {
        let l3 = lambda.powi(3);
        let l2 = lambda * lambda;
        let bumps = self
            .bumps
            .iter()
            .map(|b| GaussianBump {
                spatial: SpatialBump {
                    amplitude: b.spatial.amplitude * l2,
                    center_x: b.spatial.center_x.iter().map(|c| c / l3).collect(),
                    center_y: b.spatial.center_y.iter().map(|c| c / lambda).collect(),
                    sigma_x: b.spatial.sigma_x / l3,
                    sigma_y: b.spatial.sigma_y / lambda,
                },
                center_t: b.center_t / l2,
                sigma_t: b.sigma_t / l2,
            })
            .collect();
        Self { d: self.d, bumps }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        for b in &mut s.bumps {
            b.spatial.amplitude *= c;
        }
        s
    }

    /// `‖f‖_{L¹}` for a single bump, or the sum of bump masses (an upper
    /// bound) for several.
    pub fn l1_bound(&self) -> f64 {
        self.bumps.iter().map(|b| b.spatial.mass().abs() * b.sigma_t * (2.0 * PI).sqrt()).sum()
    }
}

impl Source for GaussianBumps {
    fn d(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64], y: &[f64], t: f64) -> f64 {
        self.bumps.iter().map(|b| b.spatial.eval(x, y) * b.time_profile(t)).sum()
    }

    fn support(&self) -> SupportBox {
        let r = GAUSSIAN_REACH;
        let mut sb = SupportBox {
            x: vec![(f64::INFINITY, f64::NEG_INFINITY); self.d],
            y: vec![(f64::INFINITY, f64::NEG_INFINITY); self.d],
            t: (f64::INFINITY, f64::NEG_INFINITY),
        };
        for b in &self.bumps {
            let s = &b.spatial;
            for i in 0..self.d {
                sb.x[i].0 = sb.x[i].0.min(s.center_x[i] - r * s.sigma_x);
                sb.x[i].1 = sb.x[i].1.max(s.center_x[i] + r * s.sigma_x);
                sb.y[i].0 = sb.y[i].0.min(s.center_y[i] - r * s.sigma_y);
                sb.y[i].1 = sb.y[i].1.max(s.center_y[i] + r * s.sigma_y);
            }
            sb.t.0 = sb.t.0.min(b.center_t - r * b.sigma_t);
            sb.t.1 = sb.t.1.max(b.center_t + r * b.sigma_t);
        }
        sb
    }

    fn feature_scale(&self) -> FeatureScale {
        let m = |f: &dyn Fn(&GaussianBump) -> f64| self.bumps.iter().map(f).fold(f64::INFINITY, f64::min);
        FeatureScale { x: m(&|b| b.spatial.sigma_x), y: m(&|b| b.spatial.sigma_y), t: m(&|b| b.sigma_t) }
    }

    fn has_closed_transform(&self) -> bool {
        true
    }

    fn sheared_transform(&self, t: f64, shear: f64, xi: &[f64], eta: &[f64], out: &mut [Complex64]) -> bool {
        let (nx, ny) = (xi.len(), eta.len());
        let d = self.d;
        let mut any = false;
        let mut planes: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); nx * ny]; d];
        for b in &self.bumps {
            let g = b.time_profile(t);
            if g < 1e-17 {
                continue;
            }
            if !any {
                out.iter_mut().for_each(|v| *v = Complex64::default());
                any = true;
            }
            let s = &b.spatial;
            let norm = 2.0 * PI * s.sigma_x * s.sigma_y;
            for (i, plane) in planes.iter_mut().enumerate() {
                let (cx, cy) = (s.center_x[i], s.center_y[i]);
                for l in 0..ny {
                    for m in 0..nx {
                        let k = xi[m];
                        let e = eta[l] - shear * k;
                        let re = -0.5 * (s.sigma_x * s.sigma_x * k * k + s.sigma_y * s.sigma_y * e * e);
                        let im = -(k * cx + e * cy);
                        plane[m + nx * l] = Complex64::from_polar(norm * re.exp(), im);
                    }
                }
            }
            let amp = s.amplitude * g;
            accumulate_product(&planes, nx, ny, d, amp, out);
        }
        any
    }
}

/// Adds `amp · Π_i plane_i(m_i, l_i)` to `out` over the lattice
/// `[m_1..m_d, l_1..l_d]`.
fn accumulate_product(planes: &[Vec<Complex64>], nx: usize, ny: usize, d: usize, amp: f64, out: &mut [Complex64]) {
    match d {
        1 => {
            for (o, p) in out.iter_mut().zip(&planes[0]) {
                *o += amp * p;
            }
        }
        _ => {
            let mut m = vec![0usize; d];
            let mut l = vec![0usize; d];
            let xb = nx.pow(d as u32);
            for (idx, o) in out.iter_mut().enumerate() {
                crate::discretization::Grid::unflatten(idx % xb, nx, &mut m);
                crate::discretization::Grid::unflatten(idx / xb, ny, &mut l);
                let mut v = Complex64::new(amp, 0.0);
                for i in 0..d {
                    v *= planes[i][m[i] + nx * l[i]];
                }
                *o += v;
            }
        }
    }
}

/// Mollified data at lag `s`: `g = ∫ f(x', y') γ(x − x' − s y', y − y', s)`
/// together with `Δy g` and `|∇x|^{2/3} g`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Propagated {
    pub value: f64,
    pub lap_y: f64,
    pub frac_x: f64,
}

/// A stationary source `f(x, y)` whose kernel propagation is available.
pub trait StationarySource: Sync {
    fn d(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;
    /// `∫ f`.
    fn mass(&self) -> f64;
    /// Smallest length scale of variation in `(x, y)`.
    fn feature_scale(&self) -> f64;
    fn propagate(&self, x: &[f64], y: &[f64], s: f64) -> Propagated;
}

/// A finite superposition of spatial Gaussian bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryBumps {
    pub d: usize,
    pub bumps: Vec<SpatialBump>,
}

impl StationaryBumps {
    pub fn new(d: usize, bumps: Vec<SpatialBump>) -> Result<Self> {
        for b in &bumps {
            b.validate(d)?;
        }
        Ok(Self { d, bumps })
    }

    /// `λ² f ∘ δ_λ`.
    pub fn dilated(&self, lambda: f64) -> Self {
        let l3 = lambda.powi(3);
        Self {
            d: self.d,
            bumps: self
                .bumps
                .iter()
                .map(|b| SpatialBump {
                    amplitude: b.amplitude * lambda * lambda,
                    center_x: b.center_x.iter().map(|c| c / l3).collect(),
                    center_y: b.center_y.iter().map(|c| c / lambda).collect(),
                    sigma_x: b.sigma_x / l3,
                    sigma_y: b.sigma_y / lambda,
                })
                .collect(),
        }
    }
}

impl StationarySource for StationaryBumps {
    fn d(&self) -> usize {
        self.d
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.eval(x, y)).sum()
    }

    fn mass(&self) -> f64 {
        self.bumps.iter().map(SpatialBump::mass).sum()
    }

    fn feature_scale(&self) -> f64 {
        self.bumps.iter().map(|b| b.sigma_x.min(b.sigma_y)).fold(f64::INFINITY, f64::min)
    }

    fn propagate(&self, x: &[f64], y: &[f64], s: f64) -> Propagated {
        let mut out = Propagated::default();
        for b in &self.bumps {
            let p = propagate_bump(b, x, y, s);
            out.value += p.value;
            out.lap_y += p.lap_y;
            out.frac_x += p.frac_x;
        }
        out
    }
}

/// Closed-form propagation of one bump.
///
/// Per component the pushed density is `N(y; μy, c) N(x; μx + (b/c)(y − μy), a − b²/c)`;
/// the `x` conditional has the same variance in every component, so
/// `|∇x|^{2/3}` acts on one isotropic Gaussian.
pub fn propagate_bump(b: &SpatialBump, x: &[f64], y: &[f64], s: f64) -> Propagated {
    let d = x.len();
    let gs = b.propagated(s);
    let mass = b.mass();
    let mut dens = 1.0;
    let mut lap_terms = 0.0;
    let mut y_part = 1.0;
    let mut r2 = 0.0;
    let cov = gs[0].cov;
    let var_x = cov[0] - cov[1] * cov[1] / cov[2];
    for (i, g) in gs.iter().enumerate() {
        let p = g.precision();
        let (a, c) = (x[i] - g.mean[0], y[i] - g.mean[1]);
        dens *= g.density(x[i], y[i]);
        let py = p[1] * a + p[2] * c;
        lap_terms += py * py - p[2];
        y_part *= (-(c * c) / (2.0 * cov[2])).exp() / (2.0 * PI * cov[2]).sqrt();
        let r = a - cov[1] / cov[2] * c;
        r2 += r * r;
    }
    let x_norm = (2.0 * PI * var_x).powf(-0.5 * d as f64);
    let frac = y_part
        * x_norm
        * crate::special::frac_laplacian_of_gaussian(d, crate::kernel::FRAC_ORDER, var_x.sqrt(), r2.sqrt());
    Propagated { value: mass * dens, lap_y: mass * dens * lap_terms, frac_x: mass * frac }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gamma1_at, gamma2_at, gamma_at};
    use crate::quadrature::{composite, Rule};
    use approx::assert_relative_eq;

    fn bump() -> SpatialBump {
        SpatialBump { amplitude: 1.3, center_x: vec![0.2], center_y: vec![-0.4], sigma_x: 0.5, sigma_y: 0.4 }
    }

    /// ∫∫ f(x', y') K(x − x' − s y', y − y', s) dx' dy' by brute-force
    /// tensor quadrature.
    fn brute(k: &dyn Fn(&[f64], &[f64], f64) -> f64, x: f64, y: f64, s: f64, xr: (f64, f64), h: f64) -> f64 {
        let b = bump();
        let r = Rule::gauss_legendre(12);
        let (ys, wy) = composite(&r, -0.4 - 4.0, -0.4 + 4.0, 0.1);
        let (xs, wx) = composite(&r, xr.0, xr.1, h);
        let mut acc = 0.0;
        for (yp, wyv) in ys.iter().zip(&wy) {
            for (xp, wxv) in xs.iter().zip(&wx) {
                acc += wyv * wxv * b.eval(&[*xp], &[*yp]) * k(&[x - xp - s * yp], &[y - yp], s);
            }
        }
        acc
    }

    #[test]
    fn closed_form_propagation_matches_kernel_quadrature() {
        let b = bump();
        for &(x, y, s) in &[(0.3, 0.1, 0.5), (-0.7, 0.9, 1.5), (1.2, -0.3, 0.2)] {
            let p = propagate_bump(&b, &[x], &[y], s);
            let g = brute(&gamma_at, x, y, s, (-5.0, 5.0), 0.05);
            let g1 = brute(&gamma1_at, x, y, s, (-5.0, 5.0), 0.05);
            assert_relative_eq!(p.value, g, max_relative = 1e-9);
            assert_relative_eq!(p.lap_y, g1, max_relative = 1e-8, epsilon = 1e-10);
        }
        // γ2 has slowly decaying x tails; integrate the smooth bump over its
        // full reach with fine panels.
        let (x, y, s) = (0.3, 0.1, 0.8);
        let p = propagate_bump(&b, &[x], &[y], s);
        let g2 = brute(&gamma2_at, x, y, s, (0.2 - 4.5, 0.2 + 4.5), 0.01);
        assert_relative_eq!(p.frac_x, g2, max_relative = 1e-6);
    }

    #[test]
    fn sheared_transform_matches_direct_integral() {
        let gb = GaussianBumps::new(
            1,
            vec![GaussianBump { spatial: bump(), center_t: 0.1, sigma_t: 0.3 }],
        )
        .unwrap();
        let (t, a) = (0.25, 0.7);
        let xi = [0.0, 1.5, -2.0];
        let eta = [0.5, -1.0];
        let mut out = vec![Complex64::default(); 6];
        assert!(gb.sheared_transform(t, a, &xi, &eta, &mut out));
        let r = Rule::gauss_legendre(16);
        let (xs, wx) = composite(&r, -6.0, 6.0, 0.1);
        for l in 0..2 {
            for m in 0..3 {
                // Transform of X ↦ f(X + a y, y, t).
                let mut acc = Complex64::default();
                for (yv, wyv) in xs.iter().zip(&wx) {
                    for (xv, wxv) in xs.iter().zip(&wx) {
                        let v = gb.eval(&[xv + a * yv], &[*yv], t);
                        acc += wyv * wxv * v * Complex64::from_polar(1.0, -(xi[m] * xv + eta[l] * yv));
                    }
                }
                assert!((acc - out[m + 3 * l]).norm() < 1e-9, "m={m} l={l}");
            }
        }
    }
}
