//! Weak-type `(1, 1)` behaviour of `Δy T` and `|∇x|^{2/3} T` on
//! concentrating bumps of unit mass.

use super::report::{grid_label, Criterion, ExperimentReport, TrialRecord};
use crate::discretization::{lp_norm, weak_l1, Grid};
use crate::error::{invalid, Result};
use crate::rng;
use crate::solver::{solve_spectral, GaussianBump, GaussianBumps, SourceTerm, SpatialBump};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fewest grid cells allowed across a bump of width `ε`.
pub const MIN_CELLS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weak11Config {
    /// Bump widths; each bump has standard deviation `ε/2` on every axis.
    pub eps: Vec<f64>,
    pub grid: Grid,
    pub seed: u64,
    /// `‖f_ε‖₁`.
    pub mass: f64,
    /// Largest accepted max/min of each weak quasinorm across widths.
    pub spread_tol: f64,
}

impl Weak11Config {
    /// `ε ∈ {0.2, 0.1, 0.05}` on the cube of half-length 0.8 at `256³`,
    /// which gives exactly 8 cells across the smallest bump.
    pub fn standard(seed: u64) -> Self {
        Self {
            eps: vec![0.2, 0.1, 0.05],
            grid: Grid::xyt(1, [0.8, 0.8, 0.8], [256, 256, 256]).expect("valid grid"),
            seed,
            mass: 1.0,
            spread_tol: 2.0,
        }
    }
}

/// A single bump of width `ε` and total mass `mass`, centred at `cx, cy`
/// in space and `ct` in time.
pub fn unit_bump(d: usize, eps: f64, mass: f64, cx: &[f64], cy: &[f64], ct: f64) -> Result<GaussianBumps> {
    let sigma = 0.5 * eps;
    let amplitude = mass / ((2.0 * PI).sqrt() * sigma).powi(2 * d as i32 + 1);
    GaussianBumps::new(
        d,
        vec![GaussianBump {
            spatial: SpatialBump { amplitude, center_x: cx.to_vec(), center_y: cy.to_vec(), sigma_x: sigma, sigma_y: sigma },
            center_t: ct,
            sigma_t: sigma,
        }],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weak11Values {
    pub eps: f64,
    pub weak_lap_y: f64,
    pub weak_frac_x: f64,
    pub l1_lap_y: f64,
    /// `‖f_ε‖₁` measured on the grid.
    pub l1_source: f64,
}

/// Solves for each width and reports the weak-`L¹` quasinorms of `Δy u`
/// and `|∇x|^{2/3} u` next to `‖Δy u‖₁`.
pub fn weak11_values(cfg: &Weak11Config) -> Result<Vec<Weak11Values>> {
    let g = &cfg.grid;
    let (ya, ta) = match (g.y, g.t) {
        (Some(y), Some(t)) => (y, t),
        _ => return invalid("weak (1,1) runs need a grid over (x, y, t)"),
    };
    if cfg.eps.is_empty() || cfg.eps.iter().any(|e| !(*e > 0.0)) {
        return invalid("bump widths must be positive");
    }
    if !(cfg.mass > 0.0) {
        return invalid("bump mass must be positive");
    }
    let eps_min = cfg.eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let eps_max = cfg.eps.iter().cloned().fold(0.0, f64::max);
    let spacing = g.x.spacing().max(ya.spacing()).max(ta.spacing());
    if eps_min / spacing < MIN_CELLS {
        let suggested = (MIN_CELLS * spacing / eps_min).ceil() as usize;
        return invalid(format!(
            "grid spacing {spacing:.4} leaves {:.1} cells across the ε = {eps_min} bump; refine by at least {suggested}×",
            eps_min / spacing
        ));
    }
    let ct = -ta.half_length + 7.0 * 0.5 * eps_max;
    if ct + 2.0 * eps_max >= ta.half_length {
        return invalid("time box too short for the widest bump");
    }
    let mut r = rng::stream(cfg.seed, 0);
    let cx: Vec<f64> = (0..g.d).map(|_| r.random_range(-0.1..0.1) * g.x.half_length).collect();
    let cy: Vec<f64> = (0..g.d).map(|_| r.random_range(-0.1..0.1) * ya.half_length).collect();
    cfg.eps
        .iter()
        .map(|&eps| {
            let f = unit_bump(g.d, eps, cfg.mass, &cx, &cy, ct)?;
            let sol = solve_spectral(SourceTerm::Callable(&f), g)?;
            Ok(Weak11Values {
                eps,
                weak_lap_y: weak_l1(&sol.lap_y_u),
                weak_frac_x: weak_l1(&sol.frac_x_u),
                l1_lap_y: lp_norm(&sol.lap_y_u, 1.0)?,
                l1_source: lp_norm(&sol.source, 1.0)?,
            })
        })
        .collect()
}

pub fn weak11_experiment(cfg: &Weak11Config) -> Result<ExperimentReport> {
    let mut vals = weak11_values(cfg)?;
    vals.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let d = cfg.grid.d;
    let mut rep = ExperimentReport::new("weak11", d, cfg.seed);
    rep.param("eps", &cfg.eps);
    rep.param("grid", grid_label(&cfg.grid));
    rep.param("mass", cfg.mass);
    for (k, v) in vals.iter().enumerate() {
        for (name, value) in [
            ("weak_lap_y", v.weak_lap_y),
            ("weak_frac_x", v.weak_frac_x),
            ("l1_lap_y", v.l1_lap_y),
            ("l1_source", v.l1_source),
        ] {
            rep.trials.push(TrialRecord {
                experiment: format!("weak11/{name}"),
                trial: k,
                seed: cfg.seed,
                p: None,
                q: None,
                d,
                grid: grid_label(&cfg.grid),
                value,
                stderr: None,
            });
        }
        rep.summary.insert(format!("eps{}.weak_lap_y", v.eps), v.weak_lap_y);
        rep.summary.insert(format!("eps{}.weak_frac_x", v.eps), v.weak_frac_x);
        rep.summary.insert(format!("eps{}.l1_lap_y", v.eps), v.l1_lap_y);
    }
    let spread = |f: fn(&Weak11Values) -> f64| {
        let hi = vals.iter().map(f).fold(f64::NAN, f64::max);
        let lo = vals.iter().map(f).fold(f64::NAN, f64::min);
        hi / lo
    };
    let s_lap = spread(|v| v.weak_lap_y);
    let s_frac = spread(|v| v.weak_frac_x);
    rep.summary.insert("weak_lap_y.max_over_min".into(), s_lap);
    rep.summary.insert("weak_frac_x.max_over_min".into(), s_frac);
    rep.criteria.push(Criterion::new(
        format!("weak-L1 quasinorm of the y-Laplacian varies by less than a factor {}", cfg.spread_tol),
        s_lap < cfg.spread_tol,
        format!("max/min {s_lap:.4}"),
    ));
    rep.criteria.push(Criterion::new(
        format!("weak-L1 quasinorm of the fractional x-derivative varies by less than a factor {}", cfg.spread_tol),
        s_frac < cfg.spread_tol,
        format!("max/min {s_frac:.4}"),
    ));
    let increasing = vals.windows(2).all(|w| w[1].l1_lap_y > w[0].l1_lap_y);
    let l1: Vec<f64> = vals.iter().map(|v| v.l1_lap_y).collect();
    rep.criteria.push(Criterion::new(
        "L1 norm of the y-Laplacian strictly increases as the width shrinks",
        increasing,
        format!("L1 norms {l1:.4?}"),
    ));
    Ok(rep)
}
