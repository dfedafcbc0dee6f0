//! Time-averaged solutions of `Lu = f(x, y) χ_R(t)` and their limit.
//!
//! With `g(x, y, s) = ∫ f(x′, y′) γ(x − x′ − s y′, y − y′, s) dx′ dy′` the
//! cut-off solution is `u_R(t) = ∫_0^∞ g(s) χ((t − s)/R) ds`, so its average
//! over `[−R, R]` is `U_R = ∫_0^∞ g(s) W(s/R) ds` with
//! `W(σ) = ½ ∫_{−1−σ}^{1−σ} χ`. The limit `u_∞ = ∫_0^∞ g(s) ds` has an
//! explicit tail, `g(s) ≈ (∫f) (3/(4π²))^{d/2} s^{−2d}` for large `s`.

use super::source::StationarySource;
use crate::discretization::{Field, Grid};
use crate::error::{invalid, Result};
use crate::quadrature::{graded, Rule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `χ = 1_{[−b, b]} ∗ ρ_a`, with `ρ_a` the normalised `exp(−1/(1 − r²))`
/// bump of radius `a`. Equal to 1 on `|t| ≤ b − a` and 0 beyond `b + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub plateau: f64,
    pub reach: f64,
    #[serde(skip)]
    norm: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self::new(2.0, 4.0).expect("valid cutoff")
    }
}

fn mollifier(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

impl Cutoff {
    pub fn new(plateau: f64, reach: f64) -> Result<Self> {
        if !(plateau > 0.0 && reach > plateau) {
            return invalid("cutoff needs 0 < plateau < reach");
        }
        let mut c = Self { plateau, reach, norm: 1.0 };
        c.norm = 1.0 / c.raw_mass(-1.0, 1.0);
        Ok(c)
    }

    fn radius(&self) -> f64 {
        0.5 * (self.reach - self.plateau)
    }

    fn half_box(&self) -> f64 {
        0.5 * (self.reach + self.plateau)
    }

    /// `∫_lo^hi exp(−1/(1 − u²)) du` for `−1 ≤ lo ≤ hi ≤ 1`.
    fn raw_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let r = Rule::gauss_legendre(24);
        let n = 32;
        let h = (hi - lo) / n as f64;
        (0..n).map(|k| r.integrate(lo + k as f64 * h, lo + (k + 1) as f64 * h, mollifier)).sum()
    }

    /// `∫_{−a}^{r} ρ_a`.
    fn cdf(&self, r: f64) -> f64 {
        let u = (r / self.radius()).clamp(-1.0, 1.0);
        self.norm * self.raw_mass(-1.0, u)
    }

    pub fn value(&self, t: f64) -> f64 {
        let (a, b) = (self.radius(), self.half_box());
        let hi = (t + b).min(a);
        let lo = (t - b).max(-a);
        if hi <= lo {
            0.0
        } else {
            self.cdf(hi) - self.cdf(lo)
        }
    }

    /// `∫_p^q χ`, integrating `ρ_a(r) |[p, q] ∩ [r − b, r + b]|` piecewise
    /// between the kinks of the overlap length.
    pub fn integral(&self, p: f64, q: f64) -> f64 {
        if q <= p {
            return 0.0;
        }
        let (a, b) = (self.radius(), self.half_box());
        let mut cuts = vec![-a, a, p - b, p + b, q - b, q + b];
        cuts.retain(|c| *c >= -a && *c <= a);
        cuts.sort_by(f64::total_cmp);
        let r = Rule::gauss_legendre(24);
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let n = 16;
            let h = (w[1] - w[0]) / n as f64;
            for k in 0..n {
                let lo = w[0] + k as f64 * h;
                acc += r.integrate(lo, lo + h, |x| {
                    let len = (q.min(x + b) - p.max(x - b)).max(0.0);
                    mollifier(x / a) * len
                });
            }
        }
        acc * self.norm / a
    }

    /// `W(σ) = ½ ∫_{−1−σ}^{1−σ} χ`, the weight of lag `σR` in the average
    /// over `[−R, R]`.
    pub fn window_weight(&self, sigma: f64) -> f64 {
        0.5 * self.integral(-1.0 - sigma, 1.0 - sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryControls {
    pub nodes: usize,
    /// Growth of successive lag panels.
    pub ratio: f64,
    /// Lag integrals stop at `horizon · max R`; the rest is the analytic tail.
    pub horizon: f64,
}

impl Default for StationaryControls {
    fn default() -> Self {
        Self { nodes: 8, ratio: 1.15, horizon: 200.0 }
    }
}

#[derive(Debug, Clone)]
pub struct StationaryLevel {
    pub r: f64,
    pub u: Field,
    pub lap_y_u: Field,
    pub frac_x_u: Field,
    /// `(u_R(·, R) − u_R(·, −R)) / 2R`.
    pub boundary: Field,
    /// `‖U_R − u_∞‖_∞` on the grid.
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub levels: Vec<StationaryLevel>,
    pub u_inf: Field,
}

impl StationaryResult {
    /// Least-squares slope of `log gap` against `log R`.
    pub fn fitted_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.levels.iter().map(|l| (l.r.ln(), l.gap.ln())).collect();
        fit_slope(&pts)
    }
}

pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `(3/(4π²))^{d/2}`, the value of `γ(0, 0, 1)`.
fn kernel_origin(d: usize) -> f64 {
    (3.0 / (4.0 * PI * PI)).powf(0.5 * d as f64)
}

/// Computes `U_R`, `Δy U_R`, `|∇x|^{2/3} U_R` and the boundary term for each
/// `R`, and `u_∞`, on the nodes of an `(x, y)` grid.
pub fn solve_stationary(
    f: &dyn StationarySource,
    r_list: &[f64],
    grid: &Grid,
    chi: &Cutoff,
    controls: &StationaryControls,
) -> Result<StationaryResult> {
    if grid.y.is_none() || grid.t.is_some() {
        return invalid("stationary outputs live on an (x, y) grid");
    }
    if grid.d != f.d() {
        return invalid("source and grid dimensions differ");
    }
    if r_list.is_empty() || r_list.iter().any(|r| !(*r > 0.0)) || r_list.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("R values must be positive and strictly increasing");
    }
    let r_max = *r_list.last().expect("non-empty");
    let t_max = controls.horizon * r_max;
    if t_max < chi.reach * r_max + r_max {
        return invalid("lag horizon does not cover the support of the largest cutoff");
    }
    let h = f.feature_scale();
    let rule = Rule::gauss_legendre(controls.nodes);
    let (lags, weights) = graded(&rule, 0.0, t_max, 0.05 * h * h, controls.ratio, f64::INFINITY);

    // Lag weights per R: average window, and the cutoff at t = ±R.
    let nr = r_list.len();
    let table: Vec<Vec<[f64; 3]>> = r_list
        .par_iter()
        .map(|&r| {
            lags.iter()
                .map(|s| {
                    let sg = s / r;
                    [chi.window_weight(sg), chi.value(1.0 - sg), chi.value(-1.0 - sg)]
                })
                .collect()
        })
        .collect();

    let d = grid.d;
    let tail = f.mass() * kernel_origin(d) * t_max.powf(1.0 - 2.0 * d as f64) / (2.0 * d as f64 - 1.0);
    let n = grid.len();
    // Per node: u_inf, then per R: U, ΔyU, fracU, B, gap.
    let per_node: Vec<(f64, Vec<[f64; 5]>)> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            grid.coords(idx, &mut x, &mut y);
            let mut inf = 0.0;
            let mut acc = vec![[0.0; 5]; nr];
            for (k, (s, w)) in lags.iter().zip(&weights).enumerate() {
                let p = f.propagate(&x, &y, *s);
                inf += w * p.value;
                for (j, a) in acc.iter_mut().enumerate() {
                    let [wr, plus, minus] = table[j][k];
                    a[0] += w * wr * p.value;
                    a[1] += w * wr * p.lap_y;
                    a[2] += w * wr * p.frac_x;
                    a[3] += w * (plus - minus) * p.value;
                    a[4] += w * (wr - 1.0) * p.value;
                }
            }
            for (j, a) in acc.iter_mut().enumerate() {
                a[3] /= 2.0 * r_list[j];
                a[4] -= tail;
            }
            (inf + tail, acc)
        })
        .collect();

    let field = |sel: &dyn Fn(&(f64, Vec<[f64; 5]>)) -> f64| Field {
        grid: grid.clone(),
        values: per_node.iter().map(sel).collect(),
    };
    let levels = (0..nr)
        .map(|j| StationaryLevel {
            r: r_list[j],
            u: field(&|p| p.1[j][0]),
            lap_y_u: field(&|p| p.1[j][1]),
            frac_x_u: field(&|p| p.1[j][2]),
            boundary: field(&|p| p.1[j][3]),
            gap: per_node.iter().fold(0.0f64, |m, p| m.max(p.1[j][4].abs())),
        })
        .collect();
    Ok(StationaryResult { levels, u_inf: field(&|p| p.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cutoff_shape() {
        let c = Cutoff::default();
        for t in [0.0, 1.0, 2.0, -2.0] {
            assert_relative_eq!(c.value(t), 1.0, epsilon = 1e-13);
        }
        for t in [4.0, -4.0, 5.5] {
            assert_eq!(c.value(t), 0.0);
        }
        assert_relative_eq!(c.value(3.0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(c.value(2.7) + c.value(3.3), 1.0, epsilon = 1e-12);
        // Monotone on the transition.
        let mut prev = 1.0;
        for k in 0..=40 {
            let v = c.value(2.0 + 0.05 * k as f64);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn window_weight_matches_direct_quadrature() {
        let c = Cutoff::default();
        let r = Rule::gauss_legendre(24);
        for sigma in [0.0, 0.5, 1.0, 1.7, 3.0, 4.2, 5.0, 6.0] {
            let lo = -1.0 - sigma;
            let n = 400;
            let h = 2.0 / n as f64;
            let direct: f64 = (0..n).map(|k| r.integrate(lo + k as f64 * h, lo + (k + 1) as f64 * h, |t| c.value(t))).sum();
            assert_relative_eq!(c.window_weight(sigma), 0.5 * direct, epsilon = 1e-10);
        }
        assert_relative_eq!(c.window_weight(0.9), 1.0, epsilon = 1e-13);
        assert_eq!(c.window_weight(5.0), 0.0);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [4.0f64, 8.0, 16.0].iter().map(|r| (r.ln(), (3.0 / r).ln())).collect();
        assert_relative_eq!(fit_slope(&pts), -1.0, epsilon = 1e-12);
    }
}
