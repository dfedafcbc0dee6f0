//! Convergence of the time averages `U_R` to a stationary solution.

use super::regularity::ratios_of;
use super::report::{grid_label, pq_key, Criterion, ExperimentReport, TrialRecord};
use crate::discretization::{Field, Grid, Layout};
use crate::error::{invalid, Result};
use crate::rng;
use crate::solver::{
    solve_stationary, weak_solution_check, Cutoff, SpatialBump, StationaryBumps, StationaryControls,
    StationarySource,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingConfig {
    pub r_list: Vec<f64>,
    /// Output window over `(x, y)`.
    pub window: Grid,
    pub seed: u64,
    pub exponents: Vec<(f64, f64)>,
    pub weak_tests: usize,
    /// Largest accepted fitted slope.
    pub slope_max: f64,
    pub weak_tol: f64,
    pub refine: usize,
    pub dilation: f64,
    pub drift_tol: f64,
    pub dilation_tol: f64,
}

impl AveragingConfig {
    /// `d = 1`, `R ∈ {4, 8, 16, 32}` on the window `[−3, 3]²` at `128²`.
    pub fn standard(seed: u64) -> Self {
        Self {
            r_list: vec![4.0, 8.0, 16.0, 32.0],
            window: Grid::xy(1, [3.0, 3.0], [128, 128]).expect("valid grid"),
            seed,
            exponents: vec![(2.0, 2.0), (1.5, 3.0), (3.0, 1.5)],
            weak_tests: 5,
            slope_max: -0.7,
            weak_tol: 1e-2,
            refine: 2,
            dilation: 2.0,
            drift_tol: 0.1,
            dilation_tol: 1e-6,
        }
    }
}

/// 3 to 8 spatial bumps with centres in the half window, widths
/// log-uniform in `[0.1, 0.5]` and amplitudes in `[0.5, 1]`.
///
/// Amplitudes are positive so the total mass, which sets the leading term
/// of `U_R − u_∞`, cannot cancel.
pub fn random_stationary_source(window: &Grid, r: &mut impl Rng) -> Result<StationaryBumps> {
    let ya = window.y.ok_or_else(|| crate::Error::InvalidArgument("window needs a y axis".into()))?;
    let d = window.d;
    let count = r.random_range(3..=8);
    let (lx, ly) = (0.5 * window.x.half_length, 0.5 * ya.half_length);
    let bumps = (0..count)
        .map(|_| SpatialBump {
            amplitude: r.random_range(0.5..=1.0),
            center_x: (0..d).map(|_| r.random_range(-lx..lx)).collect(),
            center_y: (0..d).map(|_| r.random_range(-ly..ly)).collect(),
            sigma_x: r.random_range(0.1f64.ln()..0.5f64.ln()).exp(),
            sigma_y: r.random_range(0.1f64.ln()..0.5f64.ln()).exp(),
        })
        .collect();
    StationaryBumps::new(d, bumps)
}

fn stationary_ratios(f: &StationaryBumps, r: f64, window: &Grid, exponents: &[(f64, f64)]) -> Result<Vec<f64>> {
    let res = solve_stationary(f, &[r], window, &Cutoff::default(), &StationaryControls::default())?;
    let fs = Field::from_fn(window.clone(), |x, y, _| f.eval(x, y));
    let l = &res.levels[0];
    ratios_of(&l.lap_y_u, &l.frac_x_u, &fs, exponents, Layout::XInner)
}

/// Fitted convergence slope of `‖U_R − u_∞‖_∞`, the weak-form check on the
/// largest `R`, and mixed-norm ratios of the stationary output with their
/// refinement and dilation stability.
pub fn averaging_experiment(cfg: &AveragingConfig) -> Result<ExperimentReport> {
    if cfg.r_list.len() < 2 {
        return invalid("the slope fit needs at least two radii");
    }
    if cfg.exponents.iter().any(|&(p, q)| !(p > 1.0 && q > 1.0 && p.is_finite() && q.is_finite())) {
        return invalid("exponents must lie in (1, ∞)");
    }
    let f = random_stationary_source(&cfg.window, &mut rng::stream(cfg.seed, 0))?;
    let d = cfg.window.d;
    let res = solve_stationary(&f, &cfg.r_list, &cfg.window, &Cutoff::default(), &StationaryControls::default())?;
    let slope = res.fitted_slope();
    let top = res.levels.last().expect("non-empty");
    let fs = Field::from_fn(cfg.window.clone(), |x, y, _| f.eval(x, y));
    let weak = weak_solution_check(&top.u, &fs, cfg.weak_tests, cfg.seed)?;

    let mut rep = ExperimentReport::new("averaging", d, cfg.seed);
    rep.param("r_list", &cfg.r_list);
    rep.param("window", grid_label(&cfg.window));
    rep.param("bumps", f.bumps.len());
    rep.param("exponents", &cfg.exponents);
    rep.param("weak_tests", cfg.weak_tests);
    for (k, l) in res.levels.iter().enumerate() {
        rep.trials.push(TrialRecord {
            experiment: "averaging/gap".into(),
            trial: k,
            seed: cfg.seed,
            p: None,
            q: None,
            d,
            grid: grid_label(&cfg.window),
            value: l.gap,
            stderr: None,
        });
        rep.summary.insert(format!("gap_R{}", l.r), l.gap);
    }
    rep.summary.insert("fitted_slope".into(), slope);
    rep.summary.insert("weak_check".into(), weak);
    rep.summary.insert("source_mass".into(), f.mass());
    rep.criteria.push(Criterion::new(
        format!("fitted slope at most {}", cfg.slope_max),
        slope <= cfg.slope_max,
        format!("slope {slope:.4} (predicted −{})", 2 * d - 1),
    ));
    rep.criteria.push(Criterion::new(
        format!("weak-form check on the largest R below {:e}", cfg.weak_tol),
        weak < cfg.weak_tol,
        format!("normalised defect {weak:.3e}"),
    ));

    let r_top = top.r;
    let base = ratios_of(&top.lap_y_u, &top.frac_x_u, &fs, &cfg.exponents, Layout::XInner)?;
    let fine_grid = cfg.window.refined(cfg.refine)?;
    let fine = stationary_ratios(&f, r_top, &fine_grid, &cfg.exponents)?;
    let lambda = cfg.dilation;
    let dil_grid = cfg.window.dilated(1.0 / lambda)?;
    let scaled = stationary_ratios(&f.dilated(lambda), r_top / (lambda * lambda), &dil_grid, &cfg.exponents)?;
    for (j, &(p, q)) in cfg.exponents.iter().enumerate() {
        let key = pq_key(p, q);
        for (variant, grid, v) in [("base", &cfg.window, base[j]), ("refined", &fine_grid, fine[j]), ("dilated", &dil_grid, scaled[j])] {
            rep.trials.push(TrialRecord {
                experiment: format!("averaging/ratio/{variant}"),
                trial: 0,
                seed: cfg.seed,
                p: Some(p),
                q: Some(q),
                d,
                grid: grid_label(grid),
                value: v,
                stderr: None,
            });
        }
        let drift = (fine[j] - base[j]).abs() / base[j];
        let dil = (scaled[j] - base[j]).abs() / base[j];
        rep.summary.insert(format!("{key}.ratio"), base[j]);
        rep.summary.insert(format!("{key}.refinement_drift"), drift);
        rep.summary.insert(format!("{key}.dilation_defect"), dil);
        rep.criteria.push(Criterion::new(
            format!("{key}: stationary ratio finite"),
            base[j].is_finite() && fine[j].is_finite(),
            format!("ratio {:.6}, refined {:.6}", base[j], fine[j]),
        ));
        rep.criteria.push(Criterion::new(
            format!("{key}: stationary refinement drift below {}", cfg.drift_tol),
            drift < cfg.drift_tol,
            format!("relative drift {drift:.3e}"),
        ));
        rep.criteria.push(Criterion::new(
            format!("{key}: stationary dilation invariance within {:e}", cfg.dilation_tol),
            dil < cfg.dilation_tol,
            format!("relative defect {dil:.3e}"),
        ));
    }
    Ok(rep)
}
