mod common;

use common::{dyadic, dyadic_measure, dyadic_system_in, exercise};
use orbital::io::load_config;
use orbital::{
    additivity_check, enumerate_series, enumerate_series_with, exercise_closed_interval_probe, exercise_escape_study,
    fixed_point_residual, presets, uniqueness_probe, CondensationSystem, DiscreteMeasure, Ifs, MapSpec, Mu0Spec,
    Point, SeriesOptions,
};
use proptest::prelude::*;

#[test]
fn residual_decays_at_rate_q() {
    for p in [0.5, 0.3] {
        let sys = exercise(p);
        let pts: Vec<(f64, f64)> = (5..=30)
            .map(|m| {
                let t = enumerate_series(&sys, m, 0.0).unwrap();
                (m as f64, fixed_point_residual(&sys, &t.measure).unwrap().ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let target = (1.0 - p).ln();
        assert!((slope / target - 1.0).abs() <= 0.05, "p = {p}: slope {slope} vs {target}");
    }
}

/// Maps whose orbits stay on a finite set: origin-fixing isometries and
/// constant maps, all inside the unit ball of the max-norm.
fn finite_orbit_map(dim: usize) -> BoxedStrategy<MapSpec<f64>> {
    if dim == 1 {
        prop_oneof![
            Just(MapSpec::affine1d(1.0, 0.0)),
            Just(MapSpec::affine1d(-1.0, 0.0)),
            dyadic(-8, 8, 8.0).prop_map(|c| MapSpec::affine1d(0.0, c)),
        ]
        .boxed()
    } else {
        let sym = prop_oneof![
            Just([[0.0, -1.0], [1.0, 0.0]]),
            Just([[-1.0, 0.0], [0.0, -1.0]]),
            Just([[1.0, 0.0], [0.0, -1.0]]),
            Just([[0.0, 1.0], [1.0, 0.0]]),
        ];
        prop_oneof![
            sym.prop_map(|m| MapSpec::affine2d(m, [0.0, 0.0])),
            (dyadic(-8, 8, 8.0), dyadic(-8, 8, 8.0)).prop_map(|(x, y)| MapSpec::affine2d([[0.0; 2]; 2], [x, y])),
        ]
        .boxed()
    }
}

fn finite_orbit_system() -> impl Strategy<Value = CondensationSystem<f64>> {
    (1usize..=2, 1usize..=3)
        .prop_flat_map(|(dim, n)| {
            (
                prop::collection::vec(finite_orbit_map(dim), n),
                prop::collection::vec(0.05..1.0f64, n),
                dyadic_measure(dim, 3),
                0.05..0.95f64,
            )
        })
        .prop_map(|(maps, w, mu0, p)| {
            let s: f64 = w.iter().sum();
            let ifs = Ifs::new(maps, w.iter().map(|x| x / s).collect()).unwrap();
            CondensationSystem::new(ifs, mu0, p).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn starts_are_forgotten_after_forty_steps(
        (sys, a, b) in finite_orbit_system().prop_flat_map(|s| {
            let d = s.dim();
            (Just(s), dyadic_measure(d, 4), dyadic_measure(d, 4))
        }),
    ) {
        const M: usize = 40;
        let r = uniqueness_probe(&sys, &[a, b], M).unwrap();
        let diam = if sys.dim() == 1 { 2.0 } else { 2.0 * std::f64::consts::SQRT_2 };
        prop_assert!(r.max_distance <= 2.0 * sys.q().powi(M as i32) * diam + 1e-9,
            "distance {} for q = {}", r.max_distance, sys.q());
        prop_assert!(r.within_bound(1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn contracting_systems_forget_starts(
        (sys, a, b) in dyadic_system_in(1, 3).prop_flat_map(|s| (Just(s), dyadic_measure(1, 3), dyadic_measure(1, 3))),
    ) {
        const M: usize = 10;
        let r = uniqueness_probe(&sys, &[a, b], M).unwrap();
        prop_assert!(r.within_bound(1e-9), "distance {} vs bound {}", r.max_distance, r.bound);
    }

    #[test]
    fn escape_ratio_follows_closed_form(x in 0.0..0.99f64, ps in prop::collection::vec(0.001..1.0f64, 1..5)) {
        let rows = exercise_escape_study(&ps, x, &Mu0Spec::PointMass(Point::d1(0.0)), 1).unwrap();
        // Atoms sit at 1 - 2^-n; those at or below x are n = 0..=n_star.
        let n_star = (0..).take_while(|&n| 1.0 - 0.5f64.powi(n) <= x).last().unwrap();
        for r in rows {
            let q = 1.0 - r.p;
            let expect: f64 = (0..=n_star).map(|n| q.powi(n)).sum();
            prop_assert!((r.ratio - expect).abs() <= 1e-9, "p = {}: {} vs {}", r.p, r.ratio, expect);
            prop_assert!(r.ratio <= (n_star + 1) as f64 + 1e-12);
        }
    }
}

#[test]
fn escape_table_vanishes_linearly() {
    let ps = [0.5f64, 0.1, 0.01, 0.001, 1e-4];
    let rows = exercise_escape_study(&ps, 0.9, &Mu0Spec::PointMass(Point::d1(0.0)), 1).unwrap();
    assert!(rows.windows(2).all(|w| w[1].mass < w[0].mass));
    assert!((rows[4].ratio - 4.0).abs() < 1e-3);
}

#[test]
fn closed_interval_distance() {
    let ps = [0.5f64, 0.1, 0.01];
    let rows = exercise_closed_interval_probe(&ps, &Mu0Spec::PointMass(Point::d1(0.0)), 1, None).unwrap();
    for r in &rows {
        // Σ p qⁿ 2⁻ⁿ = 2p / (1 + p)
        assert!((r.w1_to_one - 2.0 * r.p / (1.0 + r.p)).abs() <= 1e-11);
    }
    assert!(rows.windows(2).all(|w| w[1].w1_to_one < w[0].w1_to_one));
}

#[test]
fn additivity_on_presets() {
    let res: Vec<usize> = (1..=10).map(|k| 1 << k).collect();
    for (name, text) in presets::ALL {
        let cfg = load_config(text).unwrap();
        let opts = SeriesOptions { weight_floor: cfg.run.weight_floor, term_budget: cfg.run.term_budget };
        let t = enumerate_series_with(cfg.system(), cfg.depth().unwrap().min(30), &opts).unwrap();
        let bbox = t.measure.support_box().padded(0.01);
        let r = additivity_check(&t.measure, &bbox, &res).unwrap();
        assert!(r.max_abs_gap <= 1e-12, "{name}: gap {}", r.max_abs_gap);
        assert_eq!(r.escaped_mass, 0.0);
    }
}

#[test]
fn uniqueness_from_exercise_starts() {
    let sys = exercise(0.5);
    let starts = vec![
        DiscreteMeasure::dirac(Point::d1(0.0)),
        DiscreteMeasure::dirac(Point::d1(0.9)),
        Mu0Spec::UniformInterval { lo: 0.0, hi: 0.5 }.discretize(64).unwrap(),
    ];
    let r = uniqueness_probe(&sys, &starts, 20).unwrap();
    assert!(r.max_distance <= 2.0 * 0.5f64.powi(20) + 1e-9);
    assert_eq!(r.trajectory.len(), 21);
    assert!((r.trajectory[0] - 0.9).abs() < 1e-15);
}
