mod common;

use common::{dyadic_measure, dyadic_system, dyadic_system_in, real_measure};
use orbital::{
    apply_address, canonicalize, condensation_step, distance, enumerate_series, markov_apply, rho_n, AddressString,
    CondensationSystem, DiscreteMeasure, Ifs, MapSpec,
};
use proptest::prelude::*;

fn random_ifs(dim: usize) -> impl Strategy<Value = Ifs<f64>> {
    (1usize..=4).prop_flat_map(move |n| {
        let map = if dim == 1 {
            (-2.0..2.0f64, -3.0..3.0f64).prop_map(|(a, b)| MapSpec::affine1d(a, b)).boxed()
        } else {
            (prop::array::uniform4(-1.5..1.5f64), prop::array::uniform2(-3.0..3.0f64))
                .prop_map(|(m, t)| MapSpec::affine2d([[m[0], m[1]], [m[2], m[3]]], t))
                .boxed()
        };
        (prop::collection::vec(map, n), prop::collection::vec(0.01..1.0f64, n))
            .prop_map(|(maps, w)| {
                let s: f64 = w.iter().sum();
                Ifs::new(maps, w.iter().map(|x| x / s).collect()).unwrap()
            })
    })
}

/// `Σ_{|σ|=n} p_σ · f_σ(μ₀)` by listing every word.
fn rho_by_words(sys: &CondensationSystem<f64>, n: usize) -> DiscreteMeasure<f64> {
    let k = sys.ifs().len();
    let mut words = vec![Vec::new()];
    for _ in 0..n {
        words = words.iter().flat_map(|w: &Vec<usize>| (1..=k).map(move |s| [w.clone(), vec![s]].concat())).collect();
    }
    let (mut atoms, mut weights) = (Vec::new(), Vec::new());
    for w in words {
        let pw: f64 = w.iter().map(|&s| sys.ifs().probs()[s - 1]).product();
        let addr = AddressString::new(w);
        for (x, m) in sys.mu0().iter() {
            atoms.push(apply_address(sys.ifs(), &addr, x).unwrap());
            weights.push(pw * m);
        }
    }
    DiscreteMeasure::from_unnormalized(sys.dim(), atoms, weights).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn markov_preserves_mass(ifs in random_ifs(1), m in real_measure(1, 12)) {
        let out = markov_apply(&ifs, &m).unwrap();
        prop_assert!((out.total_mass() - 1.0).abs() <= 1e-12);
        prop_assert_eq!(out.len(), ifs.len() * m.len());
    }

    #[test]
    fn markov_preserves_mass_in_plane(ifs in random_ifs(2), m in real_measure(2, 12)) {
        prop_assert!((markov_apply(&ifs, &m).unwrap().total_mass() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn markov_is_linear(
        (sys, a, b) in dyadic_system_in(1, 3).prop_flat_map(|s| (Just(s), dyadic_measure(1, 5), dyadic_measure(1, 5))),
        alpha in prop_oneof![Just(0.0), Just(0.5), Just(1.0)],
    ) {
        let ifs = sys.ifs();
        let mixed = DiscreteMeasure::mixture(&[(alpha, &a), (1.0 - alpha, &b)]).unwrap();
        let lhs = canonicalize(&markov_apply(ifs, &mixed).unwrap(), 0.0);
        let (fa, fb) = (markov_apply(ifs, &a).unwrap(), markov_apply(ifs, &b).unwrap());
        let rhs = canonicalize(&DiscreteMeasure::mixture(&[(alpha, &fa), (1.0 - alpha, &fb)]).unwrap(), 0.0);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn rho_recursion_matches_words(sys in dyadic_system(3), n in 0usize..=6) {
        let direct = rho_by_words(&sys, n);
        let rec = rho_n(&sys, n, 0.0).unwrap();
        prop_assert!(distance(&rec, &direct, 16).unwrap() <= 1e-10);
    }

    #[test]
    fn step_of_truncation_has_next_support(sys in dyadic_system(3), m in 0usize..=5) {
        let t = enumerate_series(&sys, m, 0.0).unwrap();
        let stepped = condensation_step(&sys, &t.measure).unwrap();
        let next = enumerate_series(&sys, m + 1, 0.0).unwrap();
        let support = |x: &DiscreteMeasure<f64>| -> Vec<_> {
            canonicalize(x, 0.0).iter().filter(|(_, w)| *w > 0.0).map(|(a, _)| a).collect()
        };
        prop_assert_eq!(support(&stepped), support(&next.measure));
    }
}
