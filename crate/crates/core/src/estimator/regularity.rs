//! Maximal-regularity ratios `(‖Δy u‖ + ‖|∇x|^{2/3} u‖) / ‖f‖` in mixed norms.

use super::report::{grid_label, pq_key, Criterion, ExperimentReport, TrialRecord};
use crate::discretization::{mixed_norm, Field, Grid, Layout, NormSpec};
use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::solver::{solve_spectral, GaussianBump, GaussianBumps, SourceTerm, SpatialBump};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Number of standard deviations a Gaussian bump must keep from the start
/// of the time box, so the first slice is below `10⁻⁸` of the peak.
const START_CLEARANCE: f64 = 7.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityConfig {
    pub exponents: Vec<(f64, f64)>,
    pub n: usize,
    pub grid: Grid,
    pub seed: u64,
    /// Refinement factor for the stability sweep.
    pub refine: usize,
    pub dilation: f64,
    /// How many trials are repeated on the dilated ensemble.
    pub paired_trials: usize,
    pub drift_tol: f64,
    pub dilation_tol: f64,
}

impl RegularityConfig {
    /// `d = 1`, box half-lengths `(2, 2, 6)` at `64 × 64 × 128`.
    pub fn standard(exponents: Vec<(f64, f64)>, n: usize, seed: u64) -> Self {
        Self {
            exponents,
            n,
            grid: Grid::xyt(1, [2.0, 2.0, 6.0], [64, 64, 128]).expect("valid grid"),
            seed,
            refine: 2,
            dilation: 2.0,
            paired_trials: 5,
            drift_tol: 0.1,
            dilation_tol: 1e-6,
        }
    }
}

fn log_uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (r.random_range(lo.ln()..hi.ln())).exp()
}

/// 3 to 8 Gaussian bumps with centres in the half box, widths log-uniform
/// in `[0.1, 0.5]` and amplitudes `±1`. Time centres also keep clear of the
/// start of the box.
pub fn random_ensemble(grid: &Grid, r: &mut impl Rng) -> Result<GaussianBumps> {
    let (ya, ta) = match (grid.y, grid.t) {
        (Some(y), Some(t)) => (y, t),
        _ => return invalid("random sources need a grid over (x, y, t)"),
    };
    let d = grid.d;
    let count = r.random_range(3..=8);
    let mut bumps = Vec::with_capacity(count);
    for _ in 0..count {
        let sigma_x = log_uniform(r, 0.1, 0.5);
        let sigma_y = log_uniform(r, 0.1, 0.5);
        let sigma_t = log_uniform(r, 0.1, 0.5);
        let lx = 0.5 * grid.x.half_length;
        let ly = 0.5 * ya.half_length;
        let center_x = (0..d).map(|_| r.random_range(-lx..lx)).collect();
        let center_y = (0..d).map(|_| r.random_range(-ly..ly)).collect();
        let lt = 0.5 * ta.half_length;
        let t_lo = (-lt).max(-ta.half_length + START_CLEARANCE * sigma_t);
        if t_lo >= lt {
            return invalid("time box too short for the source widths");
        }
        let center_t = r.random_range(t_lo..lt);
        let amplitude = if r.random_bool(0.5) { 1.0 } else { -1.0 };
        bumps.push(GaussianBump {
            spatial: SpatialBump { amplitude, center_x, center_y, sigma_x, sigma_y },
            center_t,
            sigma_t,
        });
    }
    GaussianBumps::new(d, bumps)
}

/// The ratio for each `(p, q)`, or an error if the solve fails or `f = 0`.
fn ratios(f: &GaussianBumps, grid: &Grid, exponents: &[(f64, f64)]) -> Result<Vec<f64>> {
    let sol = solve_spectral(SourceTerm::Callable(f), grid)?;
    ratios_of(&sol.lap_y_u, &sol.frac_x_u, &sol.source, exponents, Layout::XtInner)
}

pub(crate) fn ratios_of(
    lap: &Field,
    frac: &Field,
    f: &Field,
    exponents: &[(f64, f64)],
    layout: Layout,
) -> Result<Vec<f64>> {
    exponents
        .iter()
        .map(|&(p, q)| {
            let spec = NormSpec { p, q, layout };
            let fnorm = mixed_norm(f, spec)?;
            if !(fnorm > 0.0) {
                return invalid("source has zero norm");
            }
            Ok((mixed_norm(lap, spec)? + mixed_norm(frac, spec)?) / fnorm)
        })
        .collect()
}

fn check_exponents(exponents: &[(f64, f64)]) -> Result<()> {
    if exponents.is_empty() {
        return invalid("no exponents given");
    }
    for &(p, q) in exponents {
        if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
            return invalid(format!("exponents must lie in (1, ∞), got ({p}, {q})"));
        }
    }
    Ok(())
}

/// Ratio statistics over a random source ensemble, its refinement and its
/// dilation.
///
/// Trials whose solve fails are recorded with value `NaN` and counted as
/// invalid; any invalid trial fails the finiteness criterion. A base-grid
/// solve that fails as under-resolved aborts the run with that error.
pub fn regularity_ratio(cfg: &RegularityConfig) -> Result<ExperimentReport> {
    check_exponents(&cfg.exponents)?;
    if cfg.n < 10 {
        return invalid("the ensemble needs at least 10 sources");
    }
    if cfg.refine < 2 || !(cfg.dilation > 0.0) || cfg.dilation == 1.0 {
        return invalid("refinement factor must be at least 2 and the dilation differ from 1");
    }
    let fine = cfg.grid.refined(cfg.refine)?;
    let dilated = cfg.grid.dilated(1.0 / cfg.dilation)?;
    let d = cfg.grid.d;
    let sources: Vec<GaussianBumps> =
        (0..cfg.n).map(|k| random_ensemble(&cfg.grid, &mut rng::stream(cfg.seed, k as u64))).collect::<Result<_>>()?;

    let m = cfg.exponents.len();
    let nan = vec![f64::NAN; m];
    let run = |f: &GaussianBumps, g: &Grid| ratios(f, g, &cfg.exponents).unwrap_or_else(|_| nan.clone());
    // An under-resolved base solve means the grid cannot carry the ensemble
    // at all, which is a sizing error rather than an invalid trial.
    let base: Vec<Vec<f64>> = sources
        .iter()
        .map(|f| match ratios(f, &cfg.grid, &cfg.exponents) {
            Err(e @ Error::Underresolved { .. }) => Err(e),
            r => Ok(r.unwrap_or_else(|_| nan.clone())),
        })
        .collect::<Result<_>>()?;
    let refined: Vec<Vec<f64>> = sources.iter().map(|f| run(f, &fine)).collect();
    let paired = cfg.paired_trials.min(cfg.n);
    let scaled: Vec<Vec<f64>> = sources[..paired].iter().map(|f| run(&f.dilated(cfg.dilation), &dilated)).collect();

    let mut rep = ExperimentReport::new("regularity", d, cfg.seed);
    rep.param("exponents", &cfg.exponents);
    rep.param("n", cfg.n);
    rep.param("grid", grid_label(&cfg.grid));
    rep.param("refined_grid", grid_label(&fine));
    rep.param("dilated_grid", grid_label(&dilated));
    rep.param("dilation", cfg.dilation);
    rep.param("paired_trials", paired);
    rep.param("drift_tol", cfg.drift_tol);
    rep.param("dilation_tol", cfg.dilation_tol);

    for (j, &(p, q)) in cfg.exponents.iter().enumerate() {
        let key = pq_key(p, q);
        let mut push = |variant: &str, grid: &Grid, vals: &[Vec<f64>]| {
            for (k, v) in vals.iter().enumerate() {
                rep.trials.push(TrialRecord {
                    experiment: format!("regularity/{variant}"),
                    trial: k,
                    seed: cfg.seed,
                    p: Some(p),
                    q: Some(q),
                    d,
                    grid: grid_label(grid),
                    value: v[j],
                    stderr: None,
                });
            }
        };
        push("base", &cfg.grid, &base);
        push("refined", &fine, &refined);
        push("dilated", &dilated, &scaled);

        let col = |vals: &[Vec<f64>]| vals.iter().map(|v| v[j]).collect::<Vec<f64>>();
        let (b, r, s) = (col(&base), col(&refined), col(&scaled));
        let invalid_count = b.iter().chain(&r).chain(&s).filter(|v| !v.is_finite()).count();
        let max_b = b.iter().cloned().fold(f64::NAN, f64::max);
        let max_r = r.iter().cloned().fold(f64::NAN, f64::max);
        let min_b = b.iter().cloned().fold(f64::NAN, f64::min);
        let mean_b = b.iter().sum::<f64>() / b.len() as f64;
        let drift = (max_r - max_b).abs() / max_b;
        let dil = b.iter().zip(&s).map(|(x, y)| (x - y).abs() / x).fold(0.0f64, |a, v| if v.is_nan() { f64::NAN } else { a.max(v) });

        rep.summary.insert(format!("{key}.max_ratio"), max_b);
        rep.summary.insert(format!("{key}.min_ratio"), min_b);
        rep.summary.insert(format!("{key}.mean_ratio"), mean_b);
        rep.summary.insert(format!("{key}.max_ratio_refined"), max_r);
        rep.summary.insert(format!("{key}.refinement_drift"), drift);
        rep.summary.insert(format!("{key}.dilation_defect"), dil);
        rep.summary.insert(format!("{key}.invalid_trials"), invalid_count as f64);

        rep.criteria.push(Criterion::new(
            format!("{key}: max ratio finite"),
            invalid_count == 0 && max_b.is_finite() && max_r.is_finite(),
            format!("max {max_b:.6}, refined {max_r:.6}, invalid trials {invalid_count}"),
        ));
        rep.criteria.push(Criterion::new(
            format!("{key}: refinement drift below {}", cfg.drift_tol),
            drift < cfg.drift_tol,
            format!("relative drift {drift:.3e}"),
        ));
        rep.criteria.push(Criterion::new(
            format!("{key}: dilation invariance within {:e}", cfg.dilation_tol),
            dil < cfg.dilation_tol,
            format!("largest relative defect {dil:.3e} over {paired} paired trials"),
        ));
    }
    Ok(rep)
}
