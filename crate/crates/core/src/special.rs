//! Confluent hypergeometric function on the negative axis and the Fourier
//! profile `|ζ|^s e^{-|ζ|²}` it produces.

use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Above this argument the large-`z` expansion is used.
const ASYMPTOTIC_SWITCH: f64 = 40.0;

/// `₁F₁(a; b; −z)` for `z ≥ 0` and `b > 0`.
///
/// Small arguments go through Kummer's transformation
/// `₁F₁(a; b; −z) = e^{−z} ₁F₁(b − a; b; z)`, whose series has positive
/// ratio between consecutive terms once `k > a − b`. Large arguments use the
/// algebraic expansion in `1/z`.
pub fn kummer_m_neg(a: f64, b: f64, z: f64) -> f64 {
    assert!(z >= 0.0 && b > 0.0);
    if z <= ASYMPTOTIC_SWITCH {
        let c = b - a;
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let mut k = 0.0;
        loop {
            term *= (c + k) / (b + k) * z / (k + 1.0);
            sum += term;
            k += 1.0;
            if k > z && term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
            if k > 2000.0 {
                break;
            }
        }
        (-z).exp() * sum
    } else {
        let pre = gamma_ratio(b, b - a) * z.powf(-a);
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let mut k = 0.0;
        loop {
            let next = term * (a + k) * (a - b + 1.0 + k) / ((k + 1.0) * z);
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
                if next.abs() < term.abs() {
                    sum += next;
                }
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        pre * sum
    }
}

/// `Γ(p) / Γ(q)`, signed, for `p > 0` and any non-integer-pole `q`.
fn gamma_ratio(p: f64, q: f64) -> f64 {
    if q > 0.0 {
        (ln_gamma(p) - ln_gamma(q)).exp()
    } else {
        gamma(p) / gamma(q)
    }
}

/// `(2π)^{-d} ∫_{ℝ^d} |ζ|^s e^{-|ζ|²} e^{iζ·ρ} dζ` as a function of `|ρ|`.
pub fn power_gaussian_profile(d: usize, s: f64, rho: f64) -> f64 {
    let df = d as f64;
    let a = 0.5 * (df + s);
    let b = 0.5 * df;
    let norm = (2.0 * PI).powf(-df) * PI.powf(b) * gamma_ratio(a, b);
    norm * kummer_m_neg(a, b, 0.25 * rho * rho)
}

/// `|∇|^s` applied to `exp(−|x|²/(2σ²))` on `ℝ^d`, at a point of norm `r`.
pub fn frac_laplacian_of_gaussian(d: usize, s: f64, sigma: f64, r: f64) -> f64 {
    let df = d as f64;
    let scale = (2.0f64).sqrt() / sigma;
    (2.0 * PI * sigma * sigma).powf(0.5 * df) * scale.powf(df + s) * power_gaussian_profile(d, s, scale * r)
}
