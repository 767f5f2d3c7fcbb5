//! Truncations of the orbital series
//!
//! ```text
//! μ = p·μ₀ + Σ_{|σ|≥1} p·q^{|σ|}·p_{σ₁}⋯p_{σ_K}·f_{σ₁}∘⋯∘f_{σ_K}(μ₀)
//!   = p·Σₙ qⁿ·F̂ⁿμ₀
//! ```
//!
//! computed two independent ways: by walking the tree of addresses
//! ([`enumerate_series`]) and by iterating the Markov operator
//! ([`neumann_iterate`]). Both stop at address length `M`; the mass they
//! leave out is exactly `q^{M+1}` ([`tail_mass`]).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ifs::CondensationSystem;
use crate::measure::{canonical_pairs, DiscreteMeasure, Point};
use crate::scalar::{compensated_sum, Real};
use crate::transfer::{prune, rho_step};

/// Default cap on the number of addresses an unpruned enumeration may visit.
pub const DEFAULT_TERM_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Enumeration,
    Iteration,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Enumeration => "enum",
            Route::Iteration => "neumann",
        }
    }
}

/// A depth-`M` partial sum of the orbital series.
///
/// `measure` is renormalized to unit mass; `raw_weights` are the series
/// coefficients as summed, aligned with `measure.atoms()`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedOrbital<T> {
    pub measure: DiscreteMeasure<T>,
    pub raw_weights: Vec<T>,
    pub depth: usize,
    /// `q^{M+1}`, the mass of every address longer than `M`.
    pub tail_bound: T,
    /// Σ raw weights; `1 − q^{M+1}` when nothing was pruned.
    pub raw_mass: T,
    /// Mass dropped by weight-floor or atom pruning.
    pub pruned_mass: T,
    pub route: Route,
}

impl<T: Real> TruncatedOrbital<T> {
    /// The un-renormalized partial sum as (atom, weight) pairs.
    pub fn raw_atoms(&self) -> impl Iterator<Item = (Point<T>, T)> + '_ {
        self.measure.atoms().iter().copied().zip(self.raw_weights.iter().copied())
    }

    fn from_pairs(
        sys: &CondensationSystem<T>,
        depth: usize,
        pairs: Vec<(Point<T>, T)>,
        pruned_mass: T,
        route: Route,
    ) -> Result<Self> {
        let (atoms, raw_weights) = canonical_pairs(sys.dim(), pairs, T::zero());
        let raw_mass = compensated_sum(raw_weights.iter().copied());
        let measure = DiscreteMeasure::from_unnormalized(sys.dim(), atoms, raw_weights.clone())?;
        Ok(Self { measure, raw_weights, depth, tail_bound: tail_mass(sys.q(), depth)?, raw_mass, pruned_mass, route })
    }
}

fn powi_usize<T: Real>(q: T, n: usize) -> T {
    match i32::try_from(n) {
        Ok(k) => q.powi(k),
        Err(_) => q.powf(T::from_usize(n).unwrap()),
    }
}

/// `q^{M+1}`: the series mass carried by addresses longer than `M`.
pub fn tail_mass<T: Real>(q: T, depth: usize) -> Result<T> {
    if !(q >= T::zero() && q < T::one()) {
        return Err(Error::InvalidQ(q.as_f64()));
    }
    Ok(powi_usize(q, depth + 1))
}

/// Smallest `M` with `q^{M+1} ≤ eps`.
pub fn depth_for_tolerance<T: Real>(q: T, eps: T) -> Result<usize> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::InvalidTolerance(eps.as_f64()));
    }
    if q == T::zero() {
        tail_mass(q, 0)?;
        return Ok(0);
    }
    tail_mass(q, 0)?;
    let guess = (eps.ln() / q.ln()).ceil().to_usize().unwrap_or(1).saturating_sub(1);
    let mut m = guess;
    while m > 0 && tail_mass(q, m - 1)? <= eps {
        m -= 1;
    }
    while tail_mass(q, m)? > eps {
        m += 1;
    }
    Ok(m)
}

/// Tuning for [`enumerate_series_with`].
#[derive(Clone, Copy, Debug)]
pub struct SeriesOptions<T> {
    /// Subtrees whose root coefficient is below this are skipped.
    pub weight_floor: T,
    /// Maximum address count when `weight_floor` is zero.
    pub term_budget: u64,
}

impl<T: Real> Default for SeriesOptions<T> {
    fn default() -> Self {
        Self { weight_floor: T::zero(), term_budget: DEFAULT_TERM_BUDGET }
    }
}

/// Number of addresses of length `0..=depth` over `n` symbols.
pub fn address_count(n: usize, depth: usize) -> u128 {
    let n = n as u128;
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=depth {
        total = total.saturating_add(level);
        level = level.saturating_mul(n);
    }
    total
}

/// The depth-`M` partial sum of the series, one address at a time.
pub fn enumerate_series<T: Real>(sys: &CondensationSystem<T>, depth: usize, weight_floor: T) -> Result<TruncatedOrbital<T>> {
    enumerate_series_with(sys, depth, &SeriesOptions { weight_floor, ..SeriesOptions::default() })
}

struct Node<T> {
    len: usize,
    /// `p_{σ₁}⋯p_{σ_K}`
    prob: T,
    /// `f_σ` applied to every atom of μ₀.
    images: Vec<Point<T>>,
}

pub fn enumerate_series_with<T: Real>(
    sys: &CondensationSystem<T>,
    depth: usize,
    opts: &SeriesOptions<T>,
) -> Result<TruncatedOrbital<T>> {
    if opts.weight_floor < T::zero() || !opts.weight_floor.is_finite() {
        return Err(Error::InvalidArgument("weight_floor must be a finite non-negative number".into()));
    }
    let depth_eff = if sys.q() == T::zero() { 0 } else { depth };
    if opts.weight_floor == T::zero() {
        let terms = address_count(sys.ifs().len(), depth_eff);
        if terms > opts.term_budget as u128 {
            return Err(Error::DepthOverflow { terms, budget: opts.term_budget });
        }
    }

    let root = Node { len: 0, prob: T::one(), images: sys.mu0().atoms().to_vec() };
    let n = sys.ifs().len();
    let fan_out = n > 1 && depth_eff > 0 && sys.p() >= opts.weight_floor && address_count(n, depth_eff) > 4096;
    let (pairs, pruned) = if fan_out {
        // Fan the first level out; results are concatenated in symbol order.
        let (mut pairs, mut pruned) = walk(sys, depth_eff, opts.weight_floor, &root, false);
        let subtrees: Vec<_> = (0..n)
            .into_par_iter()
            .map(|j| walk(sys, depth_eff, opts.weight_floor, &root.child(sys, j), true))
            .collect();
        for (p, m) in subtrees {
            pairs.extend(p);
            pruned += m;
        }
        (pairs, pruned)
    } else {
        walk(sys, depth_eff, opts.weight_floor, &root, true)
    };
    TruncatedOrbital::from_pairs(sys, depth, pairs, pruned, Route::Enumeration)
}

impl<T: Real> Node<T> {
    /// The node for `jσ`: `f_j` applied on the outside.
    fn child(&self, sys: &CondensationSystem<T>, j: usize) -> Self {
        let f = &sys.ifs().maps()[j];
        Node {
            len: self.len + 1,
            prob: self.prob * sys.ifs().probs()[j],
            images: self.images.iter().map(|&x| f.eval(x)).collect(),
        }
    }
}

/// Depth-first walk of the address tree below `start`. The children of `σ`
/// are `jσ`, so a child's images are `f_j` of its parent's and the
/// composition order of the series is kept.
fn walk<T: Real>(
    sys: &CondensationSystem<T>,
    depth: usize,
    floor: T,
    start: &Node<T>,
    descend: bool,
) -> (Vec<(Point<T>, T)>, T) {
    let (p, q) = (sys.p(), sys.q());
    let mu0_w = sys.mu0().weights();
    let mut pairs = Vec::new();
    let mut pruned = T::zero();
    let mut stack = vec![Node { len: start.len, prob: start.prob, images: start.images.clone() }];
    while let Some(node) = stack.pop() {
        let coeff = p * powi_usize(q, node.len) * node.prob;
        if coeff == T::zero() {
            continue;
        }
        if coeff < floor {
            // The extensions of σ up to length M carry
            // coeff·(1 + q + … + q^{M−K}) in total.
            pruned += coeff * (T::one() - powi_usize(q, depth - node.len + 1)) / p;
            continue;
        }
        pairs.extend(node.images.iter().zip(mu0_w).map(|(&x, &w)| (x, coeff * w)));
        if !descend || node.len == depth {
            continue;
        }
        // Reversed so symbol 1 is visited first.
        for j in (0..sys.ifs().len()).rev() {
            stack.push(node.child(sys, j));
        }
    }
    (pairs, pruned)
}

/// The depth-`M` partial sum `Σ_{n≤M} p·qⁿ·ρₙ` via `ρₙ₊₁ = F̂ρₙ`.
pub fn neumann_iterate<T: Real>(sys: &CondensationSystem<T>, depth: usize, prune_tol: T) -> Result<TruncatedOrbital<T>> {
    let (p, q) = (sys.p(), sys.q());
    let depth_eff = if q == T::zero() { 0 } else { depth };
    let mut pairs: Vec<(Point<T>, T)> = Vec::new();
    let mut pruned = T::zero();
    let mut rho = sys.mu0().clone();
    for n in 0..=depth_eff {
        if n > 0 {
            let next = rho_step(sys.ifs(), &rho, T::zero())?;
            let (kept, removed) = prune(&next, prune_tol)?;
            pruned += p * powi_usize(q, n) * removed;
            rho = kept;
        }
        let c = p * powi_usize(q, n);
        pairs.extend(rho.iter().map(|(a, w)| (a, c * w)));
    }
    TruncatedOrbital::from_pairs(sys, depth, pairs, pruned, Route::Iteration)
}
