use kolmogorov::discretization::{mixed_norm, Field, Grid, Layout, NormSpec};
use kolmogorov::solver::{
    pairings, random_test_bumps, solve_spectral, solve_stationary, weak_solution_check, CallableSource, Cutoff,
    FeatureScale, SourceTerm, SpatialBump, StationaryBumps, StationaryControls, StationarySource, SupportBox,
};

fn source() -> StationaryBumps {
    StationaryBumps::new(
        1,
        vec![
            SpatialBump { amplitude: 1.0, center_x: vec![0.2], center_y: vec![-0.1], sigma_x: 0.3, sigma_y: 0.25 },
            SpatialBump { amplitude: 0.5, center_x: vec![-0.4], center_y: vec![0.3], sigma_x: 0.25, sigma_y: 0.3 },
        ],
    )
    .unwrap()
}

#[test]
fn time_average_matches_spectral_solve() {
    let f = source();
    let chi = Cutoff::default();
    let r = 0.5;
    let src = CallableSource {
        d: 1,
        f: |x: &[f64], y: &[f64], t: f64| f.eval(x, y) * chi.value(t / r),
        support: SupportBox { x: vec![(-3.0, 3.0)], y: vec![(-3.0, 3.0)], t: (-4.0 * r, 4.0 * r) },
        scale: FeatureScale { x: 0.25, y: 0.25, t: 0.25 * r },
    };
    let grid = Grid::xyt(1, [16.0, 8.0, 4.0], [256, 128, 128]).unwrap();
    let sol = solve_spectral(SourceTerm::Callable(&src), &grid).unwrap();
    let ta = grid.t.unwrap();
    // Simpson over the nodes spanning [−R, R].
    let k0 = ((-r - ta.node(0)) / ta.spacing()).round() as usize;
    let k1 = ((r - ta.node(0)) / ta.spacing()).round() as usize;
    assert!((ta.node(k0) + r).abs() < 1e-12 && (ta.node(k1) - r).abs() < 1e-12);
    let n = grid.slice_len();
    let mut avg = vec![0.0; n];
    for k in k0..=k1 {
        let w = if k == k0 || k == k1 { 1.0 } else if (k - k0) % 2 == 1 { 4.0 } else { 2.0 };
        for (a, v) in avg.iter_mut().zip(sol.u.t_slice(k)) {
            *a += w * v * ta.spacing() / 3.0;
        }
    }
    // Window nodes coincide with spectral nodes: offsets 112 in x, 48 in y.
    let window = Grid::xy(1, [2.0, 2.0], [32, 32]).unwrap();
    let res = solve_stationary(&f, &[r], &window, &chi, &StationaryControls::default()).unwrap();
    let u = &res.levels[0].u;
    let peak = u.max_abs();
    let mut worst = 0.0f64;
    for j in 0..32 {
        for i in 0..32 {
            let spec = avg[(i + 112) + 256 * (j + 48)] / (2.0 * r);
            worst = worst.max((spec - u.values[i + 32 * j]).abs());
        }
    }
    assert!(worst < 1e-5 * peak, "worst {worst:e} against peak {peak:e}");
}

#[test]
fn zero_source_gives_zero_averages() {
    let f = StationaryBumps::new(1, vec![]).unwrap();
    let window = Grid::xy(1, [2.0, 2.0], [8, 8]).unwrap();
    let res = solve_stationary(&f, &[4.0, 8.0], &window, &Cutoff::default(), &StationaryControls::default()).unwrap();
    for l in &res.levels {
        assert_eq!(l.u.max_abs(), 0.0);
        assert_eq!(l.gap, 0.0);
    }
}

#[test]
fn rejects_unsorted_radii() {
    let window = Grid::xy(1, [2.0, 2.0], [8, 8]).unwrap();
    let c = StationaryControls::default();
    assert!(solve_stationary(&source(), &[8.0, 4.0], &window, &Cutoff::default(), &c).is_err());
    assert!(solve_stationary(&source(), &[], &window, &Cutoff::default(), &c).is_err());
}

#[test]
fn averages_converge_at_the_predicted_rate_and_solve_weakly() {
    let f = source();
    let window = Grid::xy(1, [3.0, 3.0], [128, 128]).unwrap();
    let res = solve_stationary(&f, &[4.0, 8.0, 16.0, 32.0], &window, &Cutoff::default(), &StationaryControls::default())
        .unwrap();
    let slope = res.fitted_slope();
    assert!((-1.3..=-0.7).contains(&slope), "slope {slope}");
    assert!(res.levels.windows(2).all(|w| w[1].gap < w[0].gap));

    let fs = Field::from_fn(window.clone(), |x, y, _| f.eval(x, y));
    let top = res.levels.last().unwrap();
    let check = weak_solution_check(&top.u, &fs, 5, 11).unwrap();
    assert!(check < 1e-2, "weak check {check:e}");
    // With the boundary term the identity is exact up to the pairing quadrature.
    let bumps = random_test_bumps(&window, 5, 11).unwrap();
    for p in pairings(&top.u, &fs, Some(&top.boundary), &bumps).unwrap() {
        assert!(p.defect().abs() < 1e-3, "defect {:e}", p.defect());
    }
}

fn ratio(f: &StationaryBumps, r: f64, window: &Grid, p: f64, q: f64) -> f64 {
    let res = solve_stationary(f, &[r], window, &Cutoff::default(), &StationaryControls::default()).unwrap();
    let spec = NormSpec { p, q, layout: Layout::XInner };
    let fs = Field::from_fn(window.clone(), |x, y, _| f.eval(x, y));
    let l = &res.levels[0];
    (mixed_norm(&l.lap_y_u, spec).unwrap() + mixed_norm(&l.frac_x_u, spec).unwrap()) / mixed_norm(&fs, spec).unwrap()
}

#[test]
fn stationary_ratio_is_dilation_invariant() {
    let f = source();
    let window = Grid::xy(1, [3.0, 3.0], [32, 32]).unwrap();
    for lambda in [0.5f64, 2.0] {
        for (p, q) in [(2.0, 2.0), (1.5, 3.0)] {
            let a = ratio(&f, 4.0 * lambda * lambda, &window, p, q);
            let b = ratio(&f.dilated(lambda), 4.0, &window.dilated(1.0 / lambda).unwrap(), p, q);
            assert!((a - b).abs() < 1e-6 * a, "λ = {lambda}, (p, q) = ({p}, {q}): {a} vs {b}");
        }
    }
}
