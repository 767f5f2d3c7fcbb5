//! Numerical checks of the fixed-point equation `μ = p·μ₀ + q·F̂μ`:
//! residuals, uniqueness from different starts, additivity over grid
//! partitions, and the escape-of-mass study for `f(x) = ½ + x/2`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ifs::{CondensationSystem, Ifs, MapSpec};
use crate::measure::{
    cdf_eval, discretize_to_grid, distance, BoundingBox, DiscreteMeasure, GridMeasure, Point,
};
use crate::sampler::Mu0Spec;
use crate::scalar::Real;
use crate::series::{depth_for_tolerance, enumerate_series, tail_mass};
use crate::transfer::{condensation_step, condensation_step_pruned};

/// Projection count for sliced distances in the plane.
pub const SLICED_DIRECTIONS: usize = 16;

/// Tail mass targeted by the escape-of-mass study.
pub const STUDY_TAIL: f64 = 1e-12;

/// Diameter of the union of the supports.
pub fn support_diameter<T: Real>(ms: &[&DiscreteMeasure<T>]) -> T {
    let mut lo = [T::infinity(); 2];
    let mut hi = [T::neg_infinity(); 2];
    for m in ms {
        for a in m.atoms() {
            for (k, &c) in a.coords().iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
    }
    let dim = ms.first().map(|m| m.dim()).unwrap_or(1);
    let s: T = (0..dim).map(|k| (hi[k] - lo[k]) * (hi[k] - lo[k])).sum();
    s.sqrt()
}

/// `W₁(m, p·μ₀ + q·F̂m)`; sliced over [`SLICED_DIRECTIONS`] in the plane.
pub fn fixed_point_residual<T: Real>(sys: &CondensationSystem<T>, m: &DiscreteMeasure<T>) -> Result<T> {
    let next = condensation_step(sys, m)?;
    distance(m, &next, SLICED_DIRECTIONS)
}

/// Upper bound `2·q^{M+1}·diam` on the residual of a depth-`M` truncation.
pub fn residual_bound<T: Real>(sys: &CondensationSystem<T>, m: &DiscreteMeasure<T>, depth: usize) -> Result<T> {
    let next = condensation_step(sys, m)?;
    Ok(T::lit(2.0) * tail_mass(sys.q(), depth)? * support_diameter(&[m, &next]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport<T> {
    /// Max pairwise distance after the last iteration.
    pub max_distance: T,
    /// Max pairwise distance after 0, 1, …, M iterations.
    pub trajectory: Vec<T>,
    /// Diameter of the union of the final supports.
    pub diameter: T,
    /// `2·q^M·diam`.
    pub bound: T,
}

impl<T: Real> UniquenessReport<T> {
    pub fn within_bound(&self, slack: T) -> bool {
        self.max_distance <= self.bound + slack
    }
}

fn max_pairwise<T: Real>(ms: &[DiscreteMeasure<T>]) -> Result<T> {
    let mut worst = T::zero();
    for i in 0..ms.len() {
        for j in i + 1..ms.len() {
            worst = worst.max(distance(&ms[i], &ms[j], SLICED_DIRECTIONS)?);
        }
    }
    Ok(worst)
}

/// Iterates `ν ↦ p·μ₀ + q·F̂ν` `M` times from every start and compares the
/// results pairwise.
pub fn uniqueness_probe<T: Real>(
    sys: &CondensationSystem<T>,
    starts: &[DiscreteMeasure<T>],
    iterations: usize,
) -> Result<UniquenessReport<T>> {
    uniqueness_probe_with(sys, starts, iterations, T::zero())
}

/// [`uniqueness_probe`] with atoms lighter than `prune_tol` dropped after
/// every step. With pruning the bound is no longer rigorous.
pub fn uniqueness_probe_with<T: Real>(
    sys: &CondensationSystem<T>,
    starts: &[DiscreteMeasure<T>],
    iterations: usize,
    prune_tol: T,
) -> Result<UniquenessReport<T>> {
    if starts.len() < 2 {
        return Err(Error::TooFewStarts);
    }
    for s in starts {
        s.expect_dim(sys.dim())?;
    }
    let mut current: Vec<DiscreteMeasure<T>> = starts.to_vec();
    let mut trajectory = vec![max_pairwise(&current)?];
    for _ in 0..iterations {
        current = current
            .par_iter()
            .map(|m| condensation_step_pruned(sys, m, prune_tol))
            .collect::<Result<_>>()?;
        trajectory.push(max_pairwise(&current)?);
    }
    let refs: Vec<&DiscreteMeasure<T>> = current.iter().collect();
    let diameter = support_diameter(&refs);
    let q_m = if iterations == 0 { T::one() } else { sys.q().powi(iterations.min(i32::MAX as usize) as i32) };
    Ok(UniquenessReport {
        max_distance: *trajectory.last().unwrap(),
        trajectory,
        diameter,
        bound: T::lit(2.0) * q_m * diameter,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdditivityRow<T> {
    pub resolution: usize,
    pub cell_sum: T,
    /// `|Σ cells + escaped − total|`
    pub partition_gap: T,
    /// Largest cell difference between the 2× coarsening of this grid and
    /// the grid at half the resolution; zero when the resolution is odd.
    pub coarsen_gap: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdditivityReport<T> {
    /// Σ cells at the finest resolution.
    pub partition_sum: T,
    pub total: T,
    pub escaped_mass: T,
    pub max_abs_gap: T,
    pub rows: Vec<AdditivityRow<T>>,
}

/// Bins `m` at every resolution (cells per axis) and checks that the cells
/// account for the whole mass and that merging neighbouring cells gives the
/// coarser grid.
pub fn additivity_check<T: Real>(
    m: &DiscreteMeasure<T>,
    bbox: &BoundingBox<T>,
    resolutions: &[usize],
) -> Result<AdditivityReport<T>> {
    let total = m.total_mass();
    let grid_at = |r: usize| discretize_to_grid(m, bbox, &vec![r; bbox.dim()]);
    let rows: Vec<(AdditivityRow<T>, GridMeasure<T>)> = resolutions
        .par_iter()
        .map(|&r| {
            let g = grid_at(r)?;
            let cell_sum = g.cell_sum();
            let partition_gap = (cell_sum + g.escaped_mass() - total).abs();
            let coarsen_gap = if r % 2 == 0 {
                let half = grid_at(r / 2)?;
                g.coarsen()
                    .cells()
                    .iter()
                    .zip(half.cells())
                    .map(|(a, b)| (*a - *b).abs())
                    .fold(T::zero(), T::max)
            } else {
                T::zero()
            };
            Ok((AdditivityRow { resolution: r, cell_sum, partition_gap, coarsen_gap }, g))
        })
        .collect::<Result<_>>()?;
    let finest = rows.iter().max_by_key(|(r, _)| r.resolution);
    let (partition_sum, escaped_mass) = match finest {
        Some((row, g)) => (row.cell_sum, g.escaped_mass()),
        None => (T::zero(), T::zero()),
    };
    let max_abs_gap =
        rows.iter().map(|(r, _)| r.partition_gap.max(r.coarsen_gap)).fold(T::zero(), T::max);
    Ok(AdditivityReport {
        partition_sum,
        total,
        escaped_mass,
        max_abs_gap,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
    })
}

/// Single map `f(x) = ½ + x/2` with condensation measure `mu0`.
pub fn exercise_system<T: Real>(p: T, mu0: DiscreteMeasure<T>) -> Result<CondensationSystem<T>> {
    let half = T::lit(0.5);
    let ifs = Ifs::new(vec![MapSpec::affine1d(half, half)], vec![T::one()])?;
    CondensationSystem::new(ifs, mu0, p)
}

fn exercise_mu0<T: Real>(mu0: &Mu0Spec<T>, mu0_atoms: usize) -> Result<DiscreteMeasure<T>> {
    if mu0.dim() != 1 || !mu0.supported_in(T::zero(), T::lit(0.5)) {
        return Err(Error::InvalidMu0Support(format!("{mu0:?}")));
    }
    mu0.discretize(mu0_atoms)
}

fn check_p_values<T: Real>(ps: &[T]) -> Result<()> {
    match ps.iter().find(|&&p| !(p > T::zero() && p <= T::one())) {
        Some(p) => Err(Error::InvalidArgument(format!("p = {p} is outside (0, 1]"))),
        None => Ok(()),
    }
}

fn study_depth<T: Real>(q: T) -> Result<usize> {
    depth_for_tolerance(q, T::lit(STUDY_TAIL))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeRow<T> {
    pub p: T,
    /// `μ_p([0, x])`
    pub mass: T,
    /// `μ_p([0, x]) / p`
    pub ratio: T,
    pub depth: usize,
}

/// `μ_p([0, x])` for each `p`, with the series cut where the tail drops
/// below [`STUDY_TAIL`]. `mu0` must live in `[0, ½)`; uniform laws are
/// replaced by `mu0_atoms` midpoints.
pub fn exercise_escape_study<T: Real>(
    p_values: &[T],
    x: T,
    mu0: &Mu0Spec<T>,
    mu0_atoms: usize,
) -> Result<Vec<EscapeRow<T>>> {
    check_p_values(p_values)?;
    if !(x >= T::zero() && x < T::one()) {
        return Err(Error::InvalidArgument(format!("x = {x} is outside [0, 1)")));
    }
    let atoms = exercise_mu0(mu0, mu0_atoms)?;
    p_values
        .par_iter()
        .map(|&p| {
            let sys = exercise_system(p, atoms.clone())?;
            let depth = if sys.q() == T::zero() { 0 } else { study_depth(sys.q())? };
            let t = enumerate_series(&sys, depth, T::zero())?;
            let mass = cdf_eval(&t.measure, x)?;
            Ok(EscapeRow { p, mass, ratio: mass / p, depth })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedIntervalRow<T> {
    pub p: T,
    /// `W₁(μ_p, δ₁)`
    pub w1_to_one: T,
    pub depth: usize,
}

/// `W₁(μ_p, δ₁)` for each `p` on `[0, 1]`, where `δ₁` is fixed by `f`.
/// `depth` defaults to the [`STUDY_TAIL`] depth for each `p`.
pub fn exercise_closed_interval_probe<T: Real>(
    p_values: &[T],
    mu0: &Mu0Spec<T>,
    mu0_atoms: usize,
    depth: Option<usize>,
) -> Result<Vec<ClosedIntervalRow<T>>> {
    check_p_values(p_values)?;
    let atoms = exercise_mu0(mu0, mu0_atoms)?;
    let one = DiscreteMeasure::dirac(Point::d1(T::one()));
    p_values
        .par_iter()
        .map(|&p| {
            let sys = exercise_system(p, atoms.clone())?;
            let depth = match depth {
                Some(d) => d,
                None if sys.q() == T::zero() => 0,
                None => study_depth(sys.q())?,
            };
            let t = enumerate_series(&sys, depth, T::zero())?;
            Ok(ClosedIntervalRow { p, w1_to_one: distance(&t.measure, &one, SLICED_DIRECTIONS)?, depth })
        })
        .collect()
}
