use kolmogorov::discretization::Grid;
use kolmogorov::estimator::suites::{group_checks, kernel_identities, Fault, SuiteOptions};
use kolmogorov::estimator::*;
use kolmogorov::geometry::{GPoint, CONSTANTS};
use kolmogorov::kernel::KernelId;
use kolmogorov::rng;
use kolmogorov::solver::StationarySource;
use proptest::prelude::*;

fn pt(x: f64, y: f64, t: f64) -> GPoint {
    GPoint::new(vec![x], vec![y], t).unwrap()
}

#[test]
fn hormander_rejects_coincident_points_and_small_constants() {
    let z = pt(0.1, 0.2, 0.3);
    let c1 = CONSTANTS.c1;
    assert!(hormander_integral(KernelId::Gamma1, &z, &z, c1, 4096, 1).is_err());
    assert!(hormander_integral(KernelId::Gamma1, &z, &pt(0.0, 0.0, 0.0), 0.5 * c1, 4096, 1).is_err());
    assert!(hormander_integral(KernelId::Gamma, &z, &pt(0.0, 0.0, 0.0), c1, 4096, 1).is_err());
}

#[test]
fn hormander_estimates_are_dilation_invariant() {
    let (z1, z2) = (pt(0.3, -0.4, 0.2), pt(-0.1, 0.5, -0.3));
    for kernel in [KernelId::Gamma1, KernelId::Gamma2] {
        let base = hormander_integral(kernel, &z1, &z2, CONSTANTS.c1, 1 << 15, 1).unwrap();
        for (k, lambda) in [0.5, 2.0].into_iter().enumerate() {
            let e = hormander_integral(
                kernel,
                &z1.dilate(lambda).unwrap(),
                &z2.dilate(lambda).unwrap(),
                CONSTANTS.c1,
                1 << 15,
                rng::derive(1, k as u64),
            )
            .unwrap();
            for (a, b) in [(&base.direct, &e.direct), (&base.adjoint, &e.adjoint)] {
                let sigma = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
                assert!((a.value - b.value).abs() <= 3.0 * sigma, "{kernel:?} λ={lambda}: {a:?} vs {b:?}");
            }
        }
        assert!(!base.low_confidence);
    }
}

#[test]
fn equal_neighbours_give_zero_difference() {
    let c = DifferenceControls::default();
    let e = kernel_difference_anisotropic(&[2.0], &[0.3], &[0.3], &[0.0], 0.0, false, &c).unwrap();
    assert_eq!(e.integral, 0.0);
}

#[test]
fn difference_requires_separation() {
    let c = DifferenceControls::default();
    assert!(kernel_difference_anisotropic(&[0.5], &[0.0], &[-0.2], &[0.0], 0.0, false, &c).is_err());
    assert!(kernel_difference_anisotropic(&[0.0], &[0.0], &[0.0], &[0.0], 0.0, false, &c).is_err());
}

#[test]
fn difference_ratio_is_stable_across_scales() {
    let c = DifferenceControls::default();
    for adjoint in [false, true] {
        let r: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&s| kernel_difference_anisotropic(&[s], &[0.0], &[-0.15], &[0.0], 0.0, adjoint, &c).unwrap().ratio)
            .collect();
        let hi = r.iter().cloned().fold(0.0, f64::max);
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 2.0, "adjoint={adjoint}: {r:?}");
    }
}

#[test]
fn difference_is_translation_invariant_in_x_and_t() {
    let c = DifferenceControls::default();
    let a = kernel_difference_anisotropic(&[2.0], &[0.0], &[-0.15], &[0.0], 0.0, false, &c).unwrap();
    let b = kernel_difference_anisotropic(&[2.0], &[0.0], &[-0.15], &[3.0], -1.0, false, &c).unwrap();
    assert!((a.integral - b.integral).abs() < 1e-10 * a.integral);
}

fn small_weak_config(eps: Vec<f64>, mass: f64) -> Weak11Config {
    Weak11Config { eps, grid: Grid::xyt(1, [0.8, 0.8, 1.6], [64, 64, 128]).unwrap(), seed: 5, mass, spread_tol: 2.0 }
}

#[test]
fn weak11_rejects_under_resolved_bumps() {
    let err = weak11_values(&small_weak_config(vec![0.4, 0.1], 1.0)).unwrap_err();
    assert!(err.to_string().contains("refine by at least 2"), "{err}");
}

#[test]
fn weak_quasinorm_is_below_l1_and_scales_with_mass() {
    let one = weak11_values(&small_weak_config(vec![0.4, 0.2], 1.0)).unwrap();
    let two = weak11_values(&small_weak_config(vec![0.4, 0.2], 2.0)).unwrap();
    for (a, b) in one.iter().zip(&two) {
        assert!(a.weak_lap_y <= a.l1_lap_y && a.weak_lap_y.is_finite());
        assert!((a.l1_source - 1.0).abs() < 1e-3, "mass {}", a.l1_source);
        assert!((b.weak_lap_y - 2.0 * a.weak_lap_y).abs() < 1e-12 * b.weak_lap_y);
        assert!((b.weak_frac_x - 2.0 * a.weak_frac_x).abs() < 1e-12 * b.weak_frac_x);
    }
}

#[test]
fn unit_bump_has_the_requested_mass() {
    let f = unit_bump(1, 0.3, 2.5, &[0.0], &[0.0], 0.0).unwrap();
    assert!((f.l1_bound() - 2.5).abs() < 1e-12);
}

#[test]
fn averaging_needs_two_radii() {
    let mut cfg = AveragingConfig::standard(1);
    cfg.r_list = vec![8.0];
    assert!(averaging_experiment(&cfg).is_err());
}

#[test]
fn group_suite_passes_and_reports_counts() {
    let mut opts = SuiteOptions::new(3);
    opts.samples = 5000;
    let rep = group_checks(&opts);
    assert!(rep.passed());
    assert_eq!(rep.criteria.len(), 8);
    assert!(rep.summary.values().all(|v| *v == 0.0));
}

#[test]
fn corrupted_gamma1_is_caught() {
    let mut opts = SuiteOptions::new(3);
    opts.samples = 5000;
    assert!(kernel_identities(&opts).unwrap().passed());
    opts.fault = Some(Fault::Gamma1);
    let rep = kernel_identities(&opts).unwrap();
    let failed: Vec<_> = rep.criteria.iter().filter(|c| !c.passed).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].name.contains("gamma1"));
}

#[test]
fn hormander_experiment_is_deterministic() {
    let mut cfg = HormanderConfig::standard(8);
    cfg.pairs = 2;
    cfg.n_mc = 1 << 13;
    cfg.scales = vec![1.0, 2.0];
    let a = hormander_experiment(&cfg).unwrap();
    let b = hormander_experiment(&cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.trials.iter().all(|t| t.seed == 8 && t.stderr.is_some() == t.experiment.starts_with("hormander")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_sources_follow_the_ensemble_law(seed in any::<u64>()) {
        let g = Grid::xyt(1, [2.0, 2.0, 6.0], [64, 64, 128]).unwrap();
        let f = random_ensemble(&g, &mut rng::stream(seed, 0)).unwrap();
        prop_assert!((3..=8).contains(&f.bumps.len()));
        for b in &f.bumps {
            let s = &b.spatial;
            prop_assert!(s.amplitude.abs() == 1.0);
            for w in [s.sigma_x, s.sigma_y, b.sigma_t] {
                prop_assert!((0.1..=0.5).contains(&w));
            }
            prop_assert!(s.center_x[0].abs() <= 1.0 && s.center_y[0].abs() <= 1.0);
            prop_assert!(b.center_t <= 3.0 && b.center_t - 7.0 * b.sigma_t >= -6.0 - 1e-12);
        }
    }

    #[test]
    fn stationary_sources_have_positive_mass(seed in any::<u64>()) {
        let w = Grid::xy(1, [3.0, 3.0], [64, 64]).unwrap();
        let f = random_stationary_source(&w, &mut rng::stream(seed, 0)).unwrap();
        prop_assert!(f.bumps.iter().all(|b| (0.5..=1.0).contains(&b.amplitude)));
        prop_assert!(f.mass() > 0.0);
    }
}
