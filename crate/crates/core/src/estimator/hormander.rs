//! Hörmander-type integrals of the singular kernels and the anisotropic
//! kernel-difference bound.
//!
//! With `h = z2⁻¹ ∘ z1` and the substitution `z = z1 ∘ ζ`, the exterior
//! integral `∫_{d(z, z1) ≥ c d(z1, z2)} |K(z, z1) − K(z, z2)| dz` becomes
//! `∫_{‖ζ‖ ≥ c‖h‖} |k(ζ) − k(h ∘ ζ)| dζ` and its adjoint
//! `∫_{‖ζ‖ ≥ c‖h‖} |k(ζ⁻¹) − k(ζ⁻¹ ∘ h⁻¹)| dζ`.
//!
//! Both are sampled in homogeneous polar coordinates
//! `dζ = Q |B₁| r^{Q−1} dr dμ(σ)`, where `μ` is the law of `δ_{1/‖ζ‖} ζ` for
//! `ζ` uniform in the unit ball. In radial variables `a = |x|^{1/3}`,
//! `b = |y|`, `c = |t|^{1/2}` that law is Dirichlet`(3d, d, 2)` on the
//! simplex `a + b + c = 1`, with uniform directions for `x`, `y` and a
//! random sign for `t`.

use super::report::{Criterion, ExperimentReport, TrialRecord};
use crate::error::{invalid, Error, Result};
use crate::geometry::{homogeneous_dimension, unit_ball_volume, GPoint, CONSTANTS};
use crate::kernel::{gamma1_at, gamma2_at, KernelId};
use crate::quadrature::{composite, pairwise_sum, Rule};
use crate::rng::{self, Estimate, Moments};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HormanderEstimate {
    pub kernel: KernelId,
    pub direct: Estimate,
    pub adjoint: Estimate,
    /// Either standard error exceeds 20% of its estimate.
    pub low_confidence: bool,
}

/// Dirichlet parameters for the angular proposal.
#[derive(Debug, Clone, Copy)]
struct Angular {
    alpha: [f64; 3],
    log_norm: f64,
}

impl Angular {
    fn new(alpha: [f64; 3]) -> Self {
        let log_norm = ln_gamma(alpha.iter().sum()) - alpha.iter().map(|a| ln_gamma(*a)).sum::<f64>();
        Self { alpha, log_norm }
    }

    fn log_pdf(&self, w: &[f64; 3]) -> f64 {
        self.log_norm + self.alpha.iter().zip(w).map(|(a, v)| (a - 1.0) * v.ln()).sum::<f64>()
    }

    fn sample(&self, r: &mut impl Rng) -> [f64; 3] {
        let g: Vec<f64> = self
            .alpha
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(r).max(f64::MIN_POSITIVE))
            .collect();
        let s: f64 = g.iter().sum();
        [g[0] / s, g[1] / s, g[2] / s]
    }
}

/// The cone measure `μ` and, for `Γ2`, a component that crowds the
/// `x`-dominant part of the sphere where `Γ2` is largest.
struct Proposal {
    cone: Angular,
    heavy: Option<Angular>,
}

impl Proposal {
    fn new(kernel: KernelId, d: usize) -> Self {
        let df = d as f64;
        let cone = Angular::new([3.0 * df, df, 2.0]);
        let heavy = (kernel == KernelId::Gamma2).then(|| Angular::new([3.0 * df, 0.5 * df, 1.0]));
        Self { cone, heavy }
    }

    /// A sphere point in radial variables and its weight `dμ/dproposal`.
    fn sample(&self, r: &mut impl Rng) -> ([f64; 3], f64) {
        match &self.heavy {
            None => (self.cone.sample(r), 1.0),
            Some(h) => {
                let w = if r.random_bool(0.5) { self.cone.sample(r) } else { h.sample(r) };
                let ratio = (h.log_pdf(&w) - self.cone.log_pdf(&w)).exp();
                (w, 2.0 / (1.0 + ratio))
            }
        }
    }
}

fn unit_vector(r: &mut impl Rng, d: usize, out: &mut [f64]) {
    loop {
        let mut n = 0.0;
        for v in out.iter_mut().take(d) {
            *v = StandardNormal.sample(r);
            n += *v * *v;
        }
        if n > 1e-300 {
            let n = n.sqrt();
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

fn kernel_at(kernel: KernelId, z: &GPoint) -> Result<f64> {
    match kernel {
        KernelId::Gamma1 => Ok(gamma1_at(&z.x, &z.y, z.t)),
        KernelId::Gamma2 => Ok(gamma2_at(&z.x, &z.y, z.t)),
        _ => invalid("Hörmander integrals are defined for gamma1 and gamma2"),
    }
}

/// Monte Carlo estimate of the exterior integral and its adjoint for the
/// pair `(z1, z2)`, with `n_mc` samples each.
///
/// The radius is drawn from the Pareto law `r₀/r²` on `[r₀, ∞)`,
/// `r₀ = c‖h‖`, which makes the weighted integrand bounded at large `r`.
pub fn hormander_integral(
    kernel: KernelId,
    z1: &GPoint,
    z2: &GPoint,
    c: f64,
    n_mc: usize,
    seed: u64,
) -> Result<HormanderEstimate> {
    kernel_at(kernel, z1)?;
    if z1.d() != z2.d() {
        return Err(Error::DimensionMismatch { expected: z1.d(), got: z2.d() });
    }
    if z1 == z2 {
        return invalid("the two points must differ");
    }
    if !(c >= CONSTANTS.c1) || !c.is_finite() {
        return invalid(format!("exterior constant must be at least c1 = {}", CONSTANTS.c1));
    }
    if n_mc < 1000 {
        return invalid("at least 1000 Monte Carlo samples are needed");
    }
    let d = z1.d();
    let h = z2.invert().compose(z1)?;
    let h_inv = h.invert();
    let r0 = c * h.quasi_norm();
    let q = homogeneous_dimension(d);
    let scale = q * unit_ball_volume(d) / r0;
    let proposal = Proposal::new(kernel, d);

    let blocks = n_mc.div_ceil(rng::BLOCK);
    let parts: Vec<(Moments, Moments)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, b as u64);
            let count = rng::BLOCK.min(n_mc - b * rng::BLOCK);
            let (mut direct, mut adjoint) = (Moments::default(), Moments::default());
            let mut dir_x = vec![0.0; d];
            let mut dir_y = vec![0.0; d];
            for _ in 0..count {
                let (w, weight) = proposal.sample(&mut r);
                unit_vector(&mut r, d, &mut dir_x);
                unit_vector(&mut r, d, &mut dir_y);
                let sign = if r.random_bool(0.5) { 1.0 } else { -1.0 };
                // 1 − U lies in (0, 1], so the radius is finite.
                let radius = r0 / (1.0 - r.random::<f64>());
                let (a, bb, cc) = (radius * w[0], radius * w[1], radius * w[2]);
                let zeta = GPoint {
                    x: dir_x.iter().map(|v| a * a * a * v).collect(),
                    y: dir_y.iter().map(|v| bb * v).collect(),
                    t: sign * cc * cc,
                };
                let jac = weight * scale * radius.powf(q + 1.0);
                let k0 = kernel_at(kernel, &zeta).unwrap_or(0.0);
                let k1 = kernel_at(kernel, &h.compose(&zeta).expect("same d")).unwrap_or(0.0);
                direct.push(jac * (k0 - k1).abs());
                let zi = zeta.invert();
                let a0 = kernel_at(kernel, &zi).unwrap_or(0.0);
                let a1 = kernel_at(kernel, &zi.compose(&h_inv).expect("same d")).unwrap_or(0.0);
                adjoint.push(jac * (a0 - a1).abs());
            }
            (direct, adjoint)
        })
        .collect();
    let (dm, am) =
        parts.into_iter().fold((Moments::default(), Moments::default()), |(a, b), (x, y)| (a.merge(x), b.merge(y)));
    let (direct, adjoint) = (dm.estimate(), am.estimate());
    let low = |e: &Estimate| !(e.stderr <= 0.2 * e.value.abs());
    Ok(HormanderEstimate { kernel, direct, adjoint, low_confidence: low(&direct) || low(&adjoint) })
}

/// Quadrature controls for [`kernel_difference_anisotropic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceControls {
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Panels per unit of the `x` width of the kernel at a given time.
    pub panels_per_width: f64,
    /// Accepted gap between the coarse and the refined evaluation.
    pub rtol: f64,
}

impl Default for DifferenceControls {
    fn default() -> Self {
        Self { nodes: 8, panels_per_width: 2.0, rtol: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceEstimate {
    /// `‖Γ1(z, z′) − Γ1(z, (x′, y″, t′))‖_{L¹}` (or its adjoint).
    pub integral: f64,
    /// `|y′ − y″| / |y − y′|^{d+1}`.
    pub bound: f64,
    pub ratio: f64,
}

/// `L¹_{x,t}` norm of `Γ1(z, z′) − Γ1(z, (x′, y″, t′))` for
/// `z = (x, y, t)`, `z′ = (x′, y′, t′)`, or with `adjoint` the same
/// difference for the transposed kernel, `Γ1((x, y′, t), (x′, y, t′)) −
/// Γ1((x, y″, t), (x′, y, t′))`.
///
/// With `a = y − y′`, `b = y′ − y″`, `s = t − t′` and the sheared variable
/// `X = x − x′ − s y′` the direct integrand is
/// `|γ1(X, a, s) − γ1(X + s b, a + b, s)|` and the adjoint one
/// `|γ1(X, −a, s) − γ1(X, −a − b, s)|`, so neither depends on `x′, t′`.
pub fn kernel_difference_anisotropic(
    y: &[f64],
    y1: &[f64],
    y2: &[f64],
    x1: &[f64],
    t1: f64,
    adjoint: bool,
    controls: &DifferenceControls,
) -> Result<DifferenceEstimate> {
    let d = y.len();
    if d == 0 || d > 2 {
        return invalid("kernel differences are implemented for d = 1 and d = 2");
    }
    for v in [y1, y2, x1] {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
    }
    if !t1.is_finite() {
        return invalid("t′ must be finite");
    }
    let a: Vec<f64> = y.iter().zip(y1).map(|(p, q)| p - q).collect();
    let b: Vec<f64> = y1.iter().zip(y2).map(|(p, q)| p - q).collect();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(na >= CONSTANTS.c1 * nb) || na == 0.0 {
        return invalid("need |y − y′| ≥ c1 |y′ − y″| and y ≠ y′");
    }
    let bound = nb / na.powi(d as i32 + 1);
    if nb == 0.0 {
        return Ok(DifferenceEstimate { integral: 0.0, bound, ratio: 0.0 });
    }
    let coarse = difference_integral(&a, &b, adjoint, controls, 1.0);
    let fine = difference_integral(&a, &b, adjoint, controls, 2.0);
    let err = (fine - coarse).abs();
    if !(err <= controls.rtol * fine.abs()) {
        return Err(Error::Quadrature { achieved: err / fine.abs(), requested: controls.rtol });
    }
    Ok(DifferenceEstimate { integral: fine, bound, ratio: fine / bound })
}

fn difference_integral(a: &[f64], b: &[f64], adjoint: bool, c: &DifferenceControls, refine: f64) -> f64 {
    let d = a.len();
    let na2: f64 = a.iter().map(|v| v * v).sum();
    let rule = Rule::gauss_legendre(c.nodes);
    // Lag grid in log s: below s = a²e⁻⁷ both kernels are ~exp(−a²/4s); the
    // tail beyond a²e¹⁸ is O(e⁻⁹) relative.
    let (taus, tw) = composite(&rule, -7.0, 18.0, 0.25 / refine);
    let (p, q): (Vec<f64>, Vec<f64>) = if adjoint {
        (a.iter().map(|v| -v).collect(), a.iter().zip(b).map(|(u, v)| -u - v).collect())
    } else {
        (a.to_vec(), a.iter().zip(b).map(|(u, v)| u + v).collect())
    };
    let vals: Vec<f64> = taus
        .par_iter()
        .zip(&tw)
        .map(|(&tau, &w)| {
            let s = na2 * tau.exp();
            // Gaussian in X centred at s·y/2 with deviation sqrt(s³/6).
            let shift: Vec<f64> = if adjoint { vec![0.0; d] } else { b.iter().map(|v| s * v).collect() };
            let c0: Vec<f64> = p.iter().map(|v| 0.5 * s * v).collect();
            let c1: Vec<f64> = q.iter().zip(&shift).map(|(v, sh)| 0.5 * s * v - sh).collect();
            let width = (s * s * s / 6.0).sqrt();
            let reach = 12.0 * width;
            let lo: Vec<f64> = (0..d).map(|i| c0[i].min(c1[i]) - reach).collect();
            let hi: Vec<f64> = (0..d).map(|i| c0[i].max(c1[i]) + reach).collect();
            let axes: Vec<(Vec<f64>, Vec<f64>)> =
                (0..d).map(|i| composite(&rule, lo[i], hi[i], width / (c.panels_per_width * refine))).collect();
            let mut x = vec![0.0; d];
            let mut xs = vec![0.0; d];
            let inner = if d == 1 {
                let (n, wn) = &axes[0];
                let terms: Vec<f64> = n
                    .iter()
                    .zip(wn)
                    .map(|(&v, &wv)| {
                        x[0] = v;
                        xs[0] = v + shift[0];
                        wv * (gamma1_at(&x, &p, s) - gamma1_at(&xs, &q, s)).abs()
                    })
                    .collect();
                pairwise_sum(&terms)
            } else {
                let (n0, w0) = &axes[0];
                let (n1, w1) = &axes[1];
                let mut terms = Vec::with_capacity(n0.len() * n1.len());
                for (&u, &wu) in n0.iter().zip(w0) {
                    for (&v, &wv) in n1.iter().zip(w1) {
                        x[0] = u;
                        x[1] = v;
                        xs[0] = u + shift[0];
                        xs[1] = v + shift[1];
                        terms.push(wu * wv * (gamma1_at(&x, &p, s) - gamma1_at(&xs, &q, s)).abs());
                    }
                }
                pairwise_sum(&terms)
            };
            w * s * inner
        })
        .collect();
    pairwise_sum(&vals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HormanderConfig {
    pub d: usize,
    pub pairs: usize,
    pub n_mc: usize,
    pub seed: u64,
    pub dilations: Vec<f64>,
    /// Pairs (per kernel) re-estimated at each dilation.
    pub dilation_pairs: usize,
    /// `|y − y′|` values of the anisotropic sweep.
    pub scales: Vec<f64>,
    /// Fixed `|y′ − y″|` of the sweep.
    pub offset: f64,
    /// Largest accepted relative standard error.
    pub stderr_tol: f64,
    /// Dilation defects are accepted up to this many combined standard errors.
    pub sigma_tol: f64,
    /// Largest accepted max/min of the anisotropic ratios.
    pub spread_tol: f64,
}

impl HormanderConfig {
    pub fn standard(seed: u64) -> Self {
        Self {
            d: 1,
            pairs: 10,
            n_mc: 1 << 17,
            seed,
            dilations: vec![0.5, 2.0],
            dilation_pairs: 1,
            scales: vec![1.0, 2.0, 4.0, 8.0],
            offset: 0.15,
            stderr_tol: 0.2,
            sigma_tol: 3.0,
            spread_tol: 2.0,
        }
    }
}

fn random_point(r: &mut impl Rng, d: usize) -> GPoint {
    GPoint {
        x: (0..d).map(|_| r.random_range(-1.0..1.0)).collect(),
        y: (0..d).map(|_| r.random_range(-1.0..1.0)).collect(),
        t: r.random_range(-1.0..1.0),
    }
}

/// Hörmander integrals over random pairs for `Γ1` and `Γ2`, their dilation
/// invariance, and the scale sweep of the anisotropic difference bound.
pub fn hormander_experiment(cfg: &HormanderConfig) -> Result<ExperimentReport> {
    if cfg.pairs == 0 || cfg.scales.len() < 2 {
        return invalid("need at least one pair and two sweep scales");
    }
    let d = cfg.d;
    let c = CONSTANTS.c1;
    let mut rep = ExperimentReport::new("hormander", d, cfg.seed);
    rep.param("pairs", cfg.pairs);
    rep.param("n_mc", cfg.n_mc);
    rep.param("c", c);
    rep.param("dilations", &cfg.dilations);
    rep.param("dilation_pairs", cfg.dilation_pairs);
    rep.param("scales", &cfg.scales);
    rep.param("offset", cfg.offset);

    let mut pr = rng::stream(cfg.seed, u64::MAX);
    let pairs: Vec<(GPoint, GPoint)> = (0..cfg.pairs).map(|_| (random_point(&mut pr, d), random_point(&mut pr, d))).collect();
    let record = |name: String, trial: usize, e: &Estimate| TrialRecord {
        experiment: name,
        trial,
        seed: cfg.seed,
        p: None,
        q: None,
        d,
        grid: format!("mc{}", cfg.n_mc),
        value: e.value,
        stderr: Some(e.stderr),
    };

    for (ki, kernel) in [KernelId::Gamma1, KernelId::Gamma2].into_iter().enumerate() {
        let name = kernel.name();
        let mut worst_rel = 0.0f64;
        let mut max_est = 0.0f64;
        let mut all_finite = true;
        let mut base = Vec::with_capacity(cfg.pairs);
        for (k, (z1, z2)) in pairs.iter().enumerate() {
            let seed = rng::derive(cfg.seed, (ki * 1000 + k) as u64);
            let e = hormander_integral(kernel, z1, z2, c, cfg.n_mc, seed)?;
            for (variant, est) in [("direct", &e.direct), ("adjoint", &e.adjoint)] {
                all_finite &= est.value.is_finite() && est.stderr.is_finite();
                worst_rel = worst_rel.max(est.stderr / est.value.abs());
                max_est = max_est.max(est.value);
                rep.trials.push(record(format!("hormander/{name}/{variant}"), k, est));
            }
            base.push(e);
        }
        rep.summary.insert(format!("{name}.max_estimate"), max_est);
        rep.summary.insert(format!("{name}.worst_relative_stderr"), worst_rel);
        rep.criteria.push(Criterion::new(
            format!("{name}: estimates finite with relative stderr below {}", cfg.stderr_tol),
            all_finite && worst_rel < cfg.stderr_tol,
            format!("largest estimate {max_est:.4}, worst relative stderr {worst_rel:.3}"),
        ));

        let mut worst_sigma = 0.0f64;
        for (k, (z1, z2)) in pairs.iter().enumerate().take(cfg.dilation_pairs) {
            for (li, &lambda) in cfg.dilations.iter().enumerate() {
                let seed = rng::derive(cfg.seed, (ki * 1000 + 500 + k * 10 + li) as u64);
                let e = hormander_integral(kernel, &z1.dilate(lambda)?, &z2.dilate(lambda)?, c, cfg.n_mc, seed)?;
                for (variant, est, b) in [("direct", &e.direct, &base[k].direct), ("adjoint", &e.adjoint, &base[k].adjoint)] {
                    let sigma = (est.stderr.powi(2) + b.stderr.powi(2)).sqrt();
                    worst_sigma = worst_sigma.max((est.value - b.value).abs() / sigma);
                    rep.trials.push(record(format!("hormander/{name}/{variant}/dilated{lambda}"), k, est));
                }
            }
        }
        rep.summary.insert(format!("{name}.dilation_sigmas"), worst_sigma);
        rep.criteria.push(Criterion::new(
            format!("{name}: dilation invariance within {} sigma", cfg.sigma_tol),
            worst_sigma <= cfg.sigma_tol,
            format!("largest deviation {worst_sigma:.2} combined standard errors"),
        ));
    }

    let controls = DifferenceControls::default();
    for adjoint in [false, true] {
        let variant = if adjoint { "adjoint" } else { "direct" };
        let mut ratios = Vec::with_capacity(cfg.scales.len());
        for (k, &s) in cfg.scales.iter().enumerate() {
            let mut y1 = vec![0.0; d];
            let mut y2 = vec![0.0; d];
            let mut y = vec![0.0; d];
            y[0] = s;
            y2[0] = -cfg.offset;
            y1[0] = 0.0;
            let e = kernel_difference_anisotropic(&y, &y1, &y2, &vec![0.0; d], 0.0, adjoint, &controls)?;
            ratios.push(e.ratio);
            rep.trials.push(TrialRecord {
                experiment: format!("anisotropic_difference/{variant}"),
                trial: k,
                seed: cfg.seed,
                p: None,
                q: None,
                d,
                grid: format!("y-y'={s}"),
                value: e.ratio,
                stderr: None,
            });
        }
        let hi = ratios.iter().cloned().fold(f64::NAN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::NAN, f64::min);
        rep.summary.insert(format!("anisotropic_{variant}.max_over_min"), hi / lo);
        rep.criteria.push(Criterion::new(
            format!("anisotropic {variant} ratio stable within factor {}", cfg.spread_tol),
            hi / lo < cfg.spread_tol,
            format!("ratios {ratios:.4?}"),
        ));
    }
    Ok(rep)
}
