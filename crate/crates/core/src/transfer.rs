//! Measure-level operators: push-forward, the Markov operator
//! `F̂υ = Σ pₙ·fₙ(υ)`, its powers, and the condensation step
//! `T(ν) = p·μ₀ + q·F̂ν`.

use rayon::prelude::*;

use crate::error::Result;
use crate::ifs::{CondensationSystem, Ifs, MapSpec};
use crate::measure::{canonical_pairs, DiscreteMeasure, Point};
use crate::scalar::Real;

/// Atom counts below this are mapped on the calling thread.
const PAR_THRESHOLD: usize = 4096;

/// Moves every atom to its image; weights are untouched.
pub fn pushforward<T: Real>(m: &MapSpec<T>, v: &DiscreteMeasure<T>) -> Result<DiscreteMeasure<T>> {
    v.expect_dim(m.dim())?;
    let atoms = v.atoms().iter().map(|&x| m.eval(x)).collect();
    Ok(DiscreteMeasure::from_parts_unchecked(v.dim(), atoms, v.weights().to_vec()))
}

fn markov_pairs<T: Real>(ifs: &Ifs<T>, v: &DiscreteMeasure<T>, scale: T) -> Vec<(Point<T>, T)> {
    let image = |(f, &pn): (&MapSpec<T>, &T)| -> Vec<(Point<T>, T)> {
        let c = scale * pn;
        v.iter().map(|(x, w)| (f.eval(x), c * w)).collect()
    };
    let maps = ifs.maps().iter().zip(ifs.probs());
    // Collected in map order either way, so the output does not depend on
    // the thread schedule.
    let parts: Vec<Vec<_>> = if v.len() * ifs.len() >= PAR_THRESHOLD {
        maps.collect::<Vec<_>>().into_par_iter().map(image).collect()
    } else {
        maps.map(image).collect()
    };
    parts.concat()
}

/// `F̂υ = Σ pₙ·fₙ(υ)`. The result has `N·|υ|` atoms in map order and is not
/// canonicalized.
pub fn markov_apply<T: Real>(ifs: &Ifs<T>, v: &DiscreteMeasure<T>) -> Result<DiscreteMeasure<T>> {
    v.expect_dim(ifs.dim())?;
    let (atoms, weights) = markov_pairs(ifs, v, T::one()).into_iter().unzip();
    Ok(DiscreteMeasure::from_parts_unchecked(v.dim(), atoms, weights))
}

/// Drops atoms lighter than `prune_tol` and rescales the rest to unit mass.
/// Returns the removed mass.
pub fn prune<T: Real>(m: &DiscreteMeasure<T>, prune_tol: T) -> Result<(DiscreteMeasure<T>, T)> {
    if prune_tol <= T::zero() || m.weights().iter().all(|&w| w >= prune_tol) {
        return Ok((m.clone(), T::zero()));
    }
    let mut removed = T::zero();
    let mut kept = Vec::with_capacity(m.len());
    for (a, w) in m.iter() {
        if w < prune_tol {
            removed += w;
        } else {
            kept.push((a, w));
        }
    }
    if kept.is_empty() {
        // Everything is below the floor; keep the heaviest atom.
        let (a, w) = m
            .iter()
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("measures are non-empty");
        return Ok((DiscreteMeasure::dirac(a), removed - w));
    }
    Ok((DiscreteMeasure::from_weighted(m.dim(), kept)?, removed))
}

fn canonical<T: Real>(dim: usize, pairs: Vec<(Point<T>, T)>) -> Result<DiscreteMeasure<T>> {
    let (atoms, weights) = canonical_pairs(dim, pairs, T::zero());
    DiscreteMeasure::from_unnormalized(dim, atoms, weights)
}

/// `ρₙ = F̂ⁿμ₀`, canonicalized after every application and pruned below
/// `prune_tol`.
pub fn rho_n<T: Real>(sys: &CondensationSystem<T>, n: usize, prune_tol: T) -> Result<DiscreteMeasure<T>> {
    let mut rho = sys.mu0().clone();
    for _ in 0..n {
        rho = rho_step(sys.ifs(), &rho, prune_tol)?;
    }
    Ok(rho)
}

/// `ρₙ₊₁` from `ρₙ`.
pub fn rho_step<T: Real>(ifs: &Ifs<T>, rho: &DiscreteMeasure<T>, prune_tol: T) -> Result<DiscreteMeasure<T>> {
    rho.expect_dim(ifs.dim())?;
    let next = canonical(rho.dim(), markov_pairs(ifs, rho, T::one()))?;
    Ok(prune(&next, prune_tol)?.0)
}

/// `T(ν) = p·μ₀ + q·F̂ν`, canonicalized.
pub fn condensation_step<T: Real>(sys: &CondensationSystem<T>, v: &DiscreteMeasure<T>) -> Result<DiscreteMeasure<T>> {
    condensation_step_pruned(sys, v, T::zero())
}

/// [`condensation_step`] followed by [`prune`].
pub fn condensation_step_pruned<T: Real>(
    sys: &CondensationSystem<T>,
    v: &DiscreteMeasure<T>,
    prune_tol: T,
) -> Result<DiscreteMeasure<T>> {
    v.expect_dim(sys.dim())?;
    if sys.q() == T::zero() {
        return Ok(sys.mu0().clone());
    }
    let mut pairs: Vec<(Point<T>, T)> = sys.mu0().iter().map(|(a, w)| (a, sys.p() * w)).collect();
    pairs.extend(markov_pairs(sys.ifs(), v, sys.q()));
    let next = canonical(v.dim(), pairs)?;
    Ok(prune(&next, prune_tol)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::canonicalize;

    fn delta(x: f64) -> DiscreteMeasure<f64> {
        DiscreteMeasure::dirac(Point::d1(x))
    }

    fn line(pairs: &[(f64, f64)]) -> DiscreteMeasure<f64> {
        let (a, w): (Vec<_>, Vec<_>) = pairs.iter().map(|&(x, w)| (Point::d1(x), w)).unzip();
        DiscreteMeasure::new(1, a, w).unwrap()
    }

    fn halves() -> Ifs<f64> {
        Ifs::uniform(vec![MapSpec::affine1d(0.5, 0.0), MapSpec::affine1d(0.5, 0.5)]).unwrap()
    }

    fn exercise(p: f64) -> CondensationSystem<f64> {
        let ifs = Ifs::new(vec![MapSpec::affine1d(0.5, 0.5)], vec![1.0]).unwrap();
        CondensationSystem::new(ifs, delta(0.0), p).unwrap()
    }

    #[test]
    fn pushforward_examples() {
        let m = line(&[(0.1, 0.25), (0.7, 0.75)]);
        assert_eq!(pushforward(&MapSpec::identity(1), &m).unwrap(), m);
        let f = MapSpec::affine1d(0.5, 0.5);
        assert_eq!(pushforward(&f, &delta(0.0)).unwrap(), delta(0.5));
        let got = pushforward(&f, &line(&[(0.0, 0.5), (0.5, 0.5)])).unwrap();
        assert_eq!(got, line(&[(0.5, 0.5), (0.75, 0.5)]));
    }

    #[test]
    fn markov_apply_examples() {
        let m = line(&[(0.1, 0.25), (0.7, 0.75)]);
        let id = Ifs::new(vec![MapSpec::identity(1)], vec![1.0]).unwrap();
        assert_eq!(markov_apply(&id, &m).unwrap(), m);
        let got = canonicalize(&markov_apply(&halves(), &delta(0.0)).unwrap(), 0.0);
        assert_eq!(got, line(&[(0.0, 0.5), (0.5, 0.5)]));
        assert_eq!(markov_apply(&halves(), &m).unwrap().total_mass(), 1.0);
    }

    #[test]
    fn rho_examples() {
        let s = exercise(0.5);
        assert_eq!(rho_n(&s, 0, 0.0).unwrap(), *s.mu0());
        assert_eq!(rho_n(&s, 3, 0.0).unwrap(), delta(0.875));
        let s = CondensationSystem::new(halves(), delta(0.0), 0.5).unwrap();
        assert_eq!(rho_n(&s, 1, 0.0).unwrap(), line(&[(0.0, 0.5), (0.5, 0.5)]));
    }

    #[test]
    fn condensation_step_examples() {
        let s = exercise(1.0);
        assert_eq!(condensation_step(&s, &delta(0.3)).unwrap(), delta(0.0));
        let s = exercise(0.5);
        assert_eq!(condensation_step(&s, &delta(0.0)).unwrap(), line(&[(0.0, 0.5), (0.5, 0.5)]));
    }

    #[test]
    fn prune_redistributes() {
        let m = line(&[(0.0, 0.5), (1.0, 0.5 - 1e-16), (2.0, 1e-16)]);
        let (p, removed) = prune(&m, 1e-15).unwrap();
        assert_eq!(p.len(), 2);
        assert!((removed - 1e-16).abs() < 1e-30);
        assert!((p.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let planar = DiscreteMeasure::dirac(Point::d2(0.0, 0.0));
        assert!(markov_apply(&halves(), &planar).is_err());
        assert!(condensation_step(&exercise(0.5), &planar).is_err());
        assert!(pushforward(&MapSpec::identity(1), &planar).is_err());
    }
}
