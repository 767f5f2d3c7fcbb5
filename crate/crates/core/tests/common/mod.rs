#![allow(dead_code)]

use orbital::{CondensationSystem, DiscreteMeasure, Ifs, MapSpec, Point};
use proptest::prelude::*;

/// `k / denom` for `k` in `lo..=hi`.
pub fn dyadic(lo: i32, hi: i32, denom: f64) -> impl Strategy<Value = f64> {
    (lo..=hi).prop_map(move |k| k as f64 / denom)
}

pub fn point(dim: usize) -> BoxedStrategy<Point<f64>> {
    if dim == 1 {
        dyadic(-8, 8, 8.0).prop_map(Point::d1).boxed()
    } else {
        (dyadic(-8, 8, 8.0), dyadic(-8, 8, 8.0)).prop_map(|(x, y)| Point::d2(x, y)).boxed()
    }
}

/// Measures with dyadic atoms and dyadic weights (sums stay exact).
pub fn dyadic_measure(dim: usize, max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure<f64>> {
    prop::collection::vec((point(dim), 1u32..=8), 1..=max_atoms).prop_map(move |v| {
        let (atoms, w): (Vec<_>, Vec<_>) = v.into_iter().unzip();
        let total: u32 = w.iter().sum();
        // Pad to a power of two so every weight is dyadic.
        let denom = total.next_power_of_two();
        let mut weights: Vec<f64> = w.iter().map(|&k| k as f64 / denom as f64).collect();
        let mut atoms = atoms;
        if denom > total {
            atoms.push(atoms[0]);
            weights.push((denom - total) as f64 / denom as f64);
        }
        DiscreteMeasure::new(dim, atoms, weights).unwrap()
    })
}

/// Measures with arbitrary positive weights and real atoms.
pub fn real_measure(dim: usize, max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure<f64>> {
    let pt = if dim == 1 {
        (-10.0..10.0f64).prop_map(Point::d1).boxed()
    } else {
        (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| Point::d2(x, y)).boxed()
    };
    prop::collection::vec((pt, 0.001..1.0f64), 1..=max_atoms).prop_map(move |v| {
        let (atoms, w): (Vec<_>, Vec<_>) = v.into_iter().unzip();
        DiscreteMeasure::from_unnormalized(dim, atoms, w).unwrap()
    })
}

pub fn dyadic_map(dim: usize) -> BoxedStrategy<MapSpec<f64>> {
    if dim == 1 {
        (dyadic(-6, 6, 8.0), dyadic(-4, 4, 4.0)).prop_map(|(a, b)| MapSpec::affine1d(a, b)).boxed()
    } else {
        (prop::array::uniform4(dyadic(-4, 4, 8.0)), prop::array::uniform2(dyadic(-4, 4, 4.0)))
            .prop_map(|(m, t)| MapSpec::affine2d([[m[0], m[1]], [m[2], m[3]]], t))
            .boxed()
    }
}

pub fn dyadic_probs(n: usize) -> BoxedStrategy<Vec<f64>> {
    match n {
        1 => Just(vec![1.0]).boxed(),
        2 => prop_oneof![Just(vec![0.5, 0.5]), Just(vec![0.25, 0.75]), Just(vec![0.125, 0.875])].boxed(),
        _ => prop_oneof![Just(vec![0.25, 0.25, 0.5]), Just(vec![0.5, 0.375, 0.125])].boxed(),
    }
}

/// Systems with dyadic map coefficients, probabilities, rate and μ₀.
pub fn dyadic_system_in(dim: usize, max_maps: usize) -> impl Strategy<Value = CondensationSystem<f64>> {
    (1..=max_maps)
        .prop_flat_map(move |n| {
            (
                prop::collection::vec(dyadic_map(dim), n),
                dyadic_probs(n),
                dyadic_measure(dim, 3),
                dyadic(1, 7, 8.0),
            )
        })
        .prop_map(|(maps, probs, mu0, p)| CondensationSystem::new(Ifs::new(maps, probs).unwrap(), mu0, p).unwrap())
}

pub fn dyadic_system(max_maps: usize) -> impl Strategy<Value = CondensationSystem<f64>> {
    prop_oneof![dyadic_system_in(1, max_maps), dyadic_system_in(2, max_maps)]
}

pub fn exercise(p: f64) -> CondensationSystem<f64> {
    orbital::exercise_system(p, DiscreteMeasure::dirac(Point::d1(0.0))).unwrap()
}
