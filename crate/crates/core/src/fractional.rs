//! The fractional derivative `|∇x|^s`, `0 < s < 2`, as a Fourier multiplier
//! on periodic lattices and as a principal-value singular integral.

use crate::discretization::transform::{fft_axes, Direction};
use crate::discretization::Field;
use crate::error::{invalid, Error, Result};
use crate::quadrature::Rule;
use crate::special::frac_laplacian_of_gaussian;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Which normalising constant multiplies the singular integral
/// `PV ∫ (f(x + h) − f(x)) |h|^{−d−s} dh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Agrees with the multiplier `|ξ|^s`.
    Calibrated,
    /// `2^{s/2} Γ((d+s)/2) / (π^{s/2} Γ(−s/2))`.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub s: f64,
    pub d: usize,
    /// Largest inner cutoff; the extrapolation uses `r0`, `r0/2`, `r0/4`.
    pub r0: f64,
    /// Outer cutoff; beyond it `f` is treated as zero.
    pub r_outer: f64,
    /// Accepted gap between the last two extrapolation levels.
    pub tol: f64,
    /// Widest radial panel, to resolve oscillation in `f`.
    pub max_panel: f64,
    /// Angular nodes on the half circle (`d = 2`).
    pub angles: usize,
    pub normalization: Normalization,
}

impl FracParams {
    pub fn new(s: f64, d: usize) -> Result<Self> {
        let p = Self {
            s,
            d,
            r0: 0.02,
            r_outer: 40.0,
            tol: 1e-6,
            max_panel: 0.2,
            angles: 64,
            normalization: Normalization::Calibrated,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 2.0) {
            return invalid(format!("order must lie in (0, 2), got {}", self.s));
        }
        if !(self.d == 1 || self.d == 2) {
            return invalid("the singular integral is implemented for d ∈ {1, 2}");
        }
        if !(self.r0 > 0.0 && self.r0 < self.r_outer) {
            return invalid("cutoffs must satisfy 0 < r0 < r_outer");
        }
        if !(self.tol > 0.0 && self.max_panel > 0.0) || self.angles < 4 {
            return invalid("tolerance, panel width and angle count must be positive");
        }
        Ok(())
    }
}

/// Constant that makes the singular integral agree with `|ξ|^s`:
/// `2^s Γ((d+s)/2) / (π^{d/2} Γ(−s/2))`. It is negative because
/// `Γ(−s/2) < 0`.
pub fn calibrated_constant(d: usize, s: f64) -> f64 {
    let df = d as f64;
    2f64.powf(s) * gamma(0.5 * (df + s)) / (PI.powf(0.5 * df) * gamma(-0.5 * s))
}

/// The constant as printed alongside the definition of `|∂x|^s`.
pub fn printed_constant(d: usize, s: f64) -> f64 {
    let df = d as f64;
    2f64.powf(0.5 * s) * gamma(0.5 * (df + s)) / (PI.powf(0.5 * s) * gamma(-0.5 * s))
}

/// Measured calibration of the singular-integral constant on a Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub d: usize,
    pub s: f64,
    /// Multiplier value divided by the raw principal value, both for
    /// `exp(−|x|²/2)` at the origin.
    pub measured: f64,
    pub closed_form: f64,
    pub printed: f64,
    /// `printed / measured`.
    pub printed_over_measured: f64,
}

pub fn calibrate(d: usize, s: f64) -> Result<Calibration> {
    let params = FracParams::new(s, d)?;
    let g = |x: &[f64]| (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
    let raw = principal_value(&g, &vec![0.0; d], &params)?;
    let target = frac_laplacian_of_gaussian(d, s, 1.0, 0.0);
    let measured = target / raw;
    let printed = printed_constant(d, s);
    Ok(Calibration { d, s, measured, closed_form: calibrated_constant(d, s), printed, printed_over_measured: printed / measured })
}

/// `|∇x|^s` by the lattice multiplier `|ξ|^s` along the `x` axes.
pub fn frac_multiplier(field: &Field, s: f64) -> Result<Field> {
    if !(s > 0.0 && s < 2.0) && s != 2.0 {
        return invalid(format!("order must lie in (0, 2], got {s}"));
    }
    let g = &field.grid;
    if !g.x.periodic {
        return invalid("the multiplier needs a periodic x lattice");
    }
    let d = g.d;
    let shape = g.shape();
    let axes: Vec<usize> = (0..d).collect();
    let mut c: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_axes(&mut c, &shape, &axes, Direction::Forward);
    let freq = g.x.frequencies();
    let xb = g.x_block();
    let mut idx = vec![0usize; d];
    let mult: Vec<f64> = (0..xb)
        .map(|k| {
            crate::discretization::Grid::unflatten(k, g.x.n, &mut idx);
            idx.iter().map(|&m| freq[m] * freq[m]).sum::<f64>().powf(0.5 * s)
        })
        .collect();
    for chunk in c.chunks_mut(xb) {
        for (v, m) in chunk.iter_mut().zip(&mult) {
            *v *= m;
        }
    }
    fft_axes(&mut c, &shape, &axes, Direction::Inverse);
    let scale = field.max_abs().max(1e-300) * mult.iter().fold(0.0f64, |a, b| a.max(*b)).max(1.0);
    let imag = c.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    if imag > 1e-10 * scale {
        return Err(Error::Domain(format!("multiplier output has imaginary residue {imag:.3e}")));
    }
    Field::new(g.clone(), c.into_iter().map(|v| v.re).collect())
}

/// `|∇x|^s f(x0)` from the principal-value integral, multiplied by the
/// constant selected in `params`.
pub fn frac_singular(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], params: &FracParams) -> Result<f64> {
    params.validate()?;
    if x0.len() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, got: x0.len() });
    }
    let c = match params.normalization {
        Normalization::Calibrated => calibrated_constant(params.d, params.s),
        Normalization::Printed => printed_constant(params.d, params.s),
    };
    Ok(c * principal_value(f, x0, params)?)
}

/// `lim_{r→0} ∫_{|h|>r} (f(x0 + h) − f(x0)) |h|^{−d−s} dh`.
///
/// The truncated integral behaves like `I0 + a r^{2−s} + b r^{4−s}` for
/// smooth `f`, so two Richardson steps over `r0, r0/2, r0/4` remove both
/// corrections.
fn principal_value(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], params: &FracParams) -> Result<f64> {
    let s = params.s;
    let levels = [params.r0, params.r0 / 2.0, params.r0 / 4.0];
    let vals: Vec<f64> = levels.iter().map(|&r| truncated(f, x0, r, params)).collect();
    let (p1, p2) = (2.0 - s, 4.0 - s);
    let k1 = 2f64.powf(p1);
    let b1 = (k1 * vals[1] - vals[0]) / (k1 - 1.0);
    let b2 = (k1 * vals[2] - vals[1]) / (k1 - 1.0);
    let k2 = 2f64.powf(p2);
    let c = (k2 * b2 - b1) / (k2 - 1.0);
    let err = (c - b2).abs();
    let scale = c.abs().max(f(x0).abs()).max(1e-300);
    if !c.is_finite() || err > params.tol * scale {
        return Err(Error::Quadrature { achieved: err / scale, requested: params.tol });
    }
    Ok(c)
}

/// `∫_{r<|h|<R} (f(x0+h) − f(x0)) |h|^{−d−s} dh` plus the analytic tail
/// `−f(x0) |S^{d−1}| R^{−s}/s`, written with symmetric pairs `±h`.
fn truncated(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], r: f64, params: &FracParams) -> f64 {
    let d = params.d;
    let s = params.s;
    let f0 = f(x0);
    let rule = Rule::gauss_legendre(16);
    // Directions on the half sphere; trapezoid in angle is spectral.
    let dirs: Vec<Vec<f64>> = if d == 1 {
        vec![vec![1.0]]
    } else {
        (0..params.angles)
            .map(|k| {
                let th = PI * k as f64 / params.angles as f64;
                vec![th.cos(), th.sin()]
            })
            .collect()
    };
    let dir_weight = if d == 1 { 1.0 } else { PI / params.angles as f64 };
    let (nodes, weights) = crate::quadrature::graded(&rule, r, params.r_outer, r, 2.0, params.max_panel);
    let mut p = vec![0.0; d];
    let mut m = vec![0.0; d];
    let mut acc = 0.0;
    for (h, w) in nodes.iter().zip(&weights) {
        let mut ang = 0.0;
        for e in &dirs {
            for i in 0..d {
                p[i] = x0[i] + h * e[i];
                m[i] = x0[i] - h * e[i];
            }
            ang += f(&p) + f(&m) - 2.0 * f0;
        }
        acc += w * ang * dir_weight * h.powf(d as f64 - 1.0) / h.powf(d as f64 + s);
    }
    let sphere = if d == 1 { 2.0 } else { 2.0 * PI };
    acc - f0 * sphere * params.r_outer.powf(-s) / s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use approx::assert_relative_eq;

    #[test]
    fn multiplier_eigenfunctions_and_composition() {
        let g = Grid::x_only(1, PI, 64).unwrap();
        let one = Field::from_fn(g.clone(), |_, _, _| 1.0);
        assert!(frac_multiplier(&one, 0.5).unwrap().max_abs() < 1e-12);
        for k in [1.0, 3.0, 7.0] {
            let f = Field::from_fn(g.clone(), |x, _, _| (k * x[0]).cos());
            let out = frac_multiplier(&f, 2.0 / 3.0).unwrap();
            for (a, b) in out.values.iter().zip(&f.values) {
                assert!((a - k.powf(2.0 / 3.0) * b).abs() < 1e-12);
            }
        }
        let f = Field::from_fn(g, |x, _, _| (-(x[0] * x[0]) * 2.0).exp() * (1.0 + x[0]));
        let twice = frac_multiplier(&frac_multiplier(&f, 2.0 / 3.0).unwrap(), 2.0 / 3.0).unwrap();
        let once = frac_multiplier(&f, 4.0 / 3.0).unwrap();
        for (a, b) in twice.values.iter().zip(&once.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_form_is_nonnegative() {
        let g = Grid::x_only(2, 3.0, 16).unwrap();
        let f = Field::from_fn(g, |x, _, _| (x[0] * 1.3).sin() + (x[1] - 0.2).cos() * x[0]);
        let out = frac_multiplier(&f, 0.8).unwrap();
        let q: f64 = out.values.iter().zip(&f.values).map(|(a, b)| a * b).sum();
        assert!(q >= 0.0);
    }

    #[test]
    fn singular_integral_matches_gaussian_closed_form() {
        for d in [1usize, 2] {
            let p = FracParams::new(2.0 / 3.0, d).unwrap();
            let g = |x: &[f64]| (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
            for r in [0.0, 0.7, 1.5] {
                let mut x0 = vec![0.0; d];
                x0[0] = r;
                let want = frac_laplacian_of_gaussian(d, 2.0 / 3.0, 1.0, r);
                let got = frac_singular(&g, &x0, &p).unwrap();
                assert_relative_eq!(got, want, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn calibration_ratio() {
        let c = calibrate(1, 2.0 / 3.0).unwrap();
        assert_relative_eq!(c.measured, c.closed_form, max_relative = 1e-6);
        let expected = 2f64.powf(1.0 / 3.0) * PI.powf(-(1.0 - 2.0 / 3.0) / 2.0);
        assert_relative_eq!(c.measured / c.printed, expected, max_relative = 1e-6);
        assert!(c.printed < 0.0 && c.measured < 0.0);
    }

    #[test]
    fn linear_function_has_no_inner_contribution() {
        // With f linear near x0, the symmetric pairs cancel exactly.
        let p = FracParams::new(0.9, 1).unwrap();
        let f = |x: &[f64]| 2.0 * x[0] + 1.0;
        let a = truncated(&f, &[0.3], 0.02, &p);
        let b = truncated(&f, &[0.3], 0.005, &p);
        assert!((a - b).abs() < 1e-13);
    }
}
