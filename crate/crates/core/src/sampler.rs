//! Sampling from the orbital measure.
//!
//! [`sample_orbital`] reads the series as a mixture and draws from it
//! exactly: a geometric address length `L` with `P(L = n) = p·qⁿ`, `L`
//! i.i.d. symbols, and a point of μ₀ pushed through the address.
//! [`chaos_game_restart`] runs the random-iteration chain that restarts
//! from μ₀ with probability `p` per step.
//!
//! Both split their output into fixed-size chunks. Chunk `c` draws from
//! ChaCha20 stream `c` of the user seed, so a batch depends only on
//! `(seed, system, count)` and never on how many threads produced it.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ifs::CondensationSystem;
use crate::measure::{DiscreteMeasure, Point};
use crate::scalar::Real;

/// Identifies the random stream layout recorded in every batch.
pub const GENERATOR_ID: &str = "chacha20-stream-chunk65536-v1";

/// Samples per independent random stream.
pub const CHUNK_SIZE: usize = 1 << 16;
/// Chaos-game chunks use streams above this offset, exact draws below.
const CHAOS_STREAM: u64 = 1 << 63;

/// Condensation measure as a sampling recipe.
#[derive(Clone, Debug, PartialEq)]
pub enum Mu0Spec<T> {
    Atoms(DiscreteMeasure<T>),
    /// Uniform on `[lo, hi)`.
    UniformInterval { lo: T, hi: T },
    /// Uniform on `[lo₀, hi₀) × [lo₁, hi₁)`.
    UniformBox { lo: [T; 2], hi: [T; 2] },
    PointMass(Point<T>),
}

impl<T: Real> Mu0Spec<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Atoms(m) => m.dim(),
            Self::UniformInterval { .. } => 1,
            Self::UniformBox { .. } => 2,
            Self::PointMass(p) => p.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |lo: T, hi: T| lo.is_finite() && hi.is_finite() && hi > lo;
        match self {
            Self::UniformInterval { lo, hi } if !ok(*lo, *hi) => {
                Err(Error::DegenerateSpec(format!("interval [{lo}, {hi}) is empty")))
            }
            Self::UniformBox { lo, hi } if !(ok(lo[0], hi[0]) && ok(lo[1], hi[1])) => {
                Err(Error::DegenerateSpec("box has an empty side".into()))
            }
            Self::PointMass(p) if !p.is_finite() => Err(Error::DegenerateSpec("point is not finite".into())),
            _ => Ok(()),
        }
    }

    /// Atomic stand-in: atomic specs are returned as they are, uniform ones
    /// become equal-weight cell midpoints, `per_axis` cells per side.
    pub fn discretize(&self, per_axis: usize) -> Result<DiscreteMeasure<T>> {
        self.validate()?;
        let k = per_axis.max(1);
        let mid = |lo: T, hi: T, i: usize| {
            lo + (hi - lo) * (T::from_usize(i).unwrap() + T::lit(0.5)) / T::from_usize(k).unwrap()
        };
        match self {
            Self::Atoms(m) => Ok(m.clone()),
            Self::PointMass(p) => Ok(DiscreteMeasure::dirac(*p)),
            Self::UniformInterval { lo, hi } => {
                DiscreteMeasure::uniform(1, (0..k).map(|i| Point::d1(mid(*lo, *hi, i))).collect())
            }
            Self::UniformBox { lo, hi } => {
                let pts = (0..k)
                    .flat_map(|j| (0..k).map(move |i| (i, j)))
                    .map(|(i, j)| Point::d2(mid(lo[0], hi[0], i), mid(lo[1], hi[1], j)))
                    .collect();
                DiscreteMeasure::uniform(2, pts)
            }
        }
    }

    /// Whether every point of the support lies in `[lo, hi)` (1-D only).
    pub fn supported_in(&self, lo: T, hi: T) -> bool {
        match self {
            Self::Atoms(m) => m.iter().all(|(a, w)| w == T::zero() || (a.x() >= lo && a.x() < hi)),
            Self::UniformInterval { lo: a, hi: b } => *a >= lo && *b <= hi,
            Self::PointMass(p) => p.x() >= lo && p.x() < hi,
            Self::UniformBox { .. } => false,
        }
    }
}

/// A prepared μ₀ sampler: cumulative weights for atomic specs.
struct Mu0Draw<'a, T> {
    spec: &'a Mu0Spec<T>,
    cumulative: Vec<T>,
}

impl<'a, T: Real> Mu0Draw<'a, T> {
    fn new(spec: &'a Mu0Spec<T>) -> Result<Self> {
        spec.validate()?;
        let cumulative = match spec {
            Mu0Spec::Atoms(m) => cumulative(m.weights()),
            _ => Vec::new(),
        };
        Ok(Self { spec, cumulative })
    }

    fn draw(&self, rng: &mut ChaCha20Rng) -> Point<T> {
        match self.spec {
            Mu0Spec::PointMass(p) => *p,
            Mu0Spec::Atoms(m) => m.atoms()[pick(&self.cumulative, uniform(rng))],
            Mu0Spec::UniformInterval { lo, hi } => Point::d1(*lo + uniform::<T>(rng) * (*hi - *lo)),
            Mu0Spec::UniformBox { lo, hi } => {
                let u = uniform::<T>(rng);
                let v = uniform::<T>(rng);
                Point::d2(lo[0] + u * (hi[0] - lo[0]), lo[1] + v * (hi[1] - lo[1]))
            }
        }
    }
}

fn cumulative<T: Real>(w: &[T]) -> Vec<T> {
    let mut acc = T::zero();
    let mut c: Vec<T> = w
        .iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect();
    if let Some(last) = c.last_mut() {
        *last = T::infinity();
    }
    c
}

/// First index whose cumulative weight exceeds `u`.
#[inline]
fn pick<T: Real>(cumulative: &[T], u: T) -> usize {
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

#[inline]
fn uniform<T: Real>(rng: &mut ChaCha20Rng) -> T {
    T::lit(rng.random::<f64>())
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn chunks(count: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    let n = count.div_ceil(CHUNK_SIZE);
    (0..n).into_par_iter().map(move |c| (c, CHUNK_SIZE.min(count - c * CHUNK_SIZE)))
}

/// One μ₀ draw.
pub fn sample_mu0<T: Real>(spec: &Mu0Spec<T>, rng: &mut ChaCha20Rng) -> Result<Point<T>> {
    Ok(Mu0Draw::new(spec)?.draw(rng))
}

/// Seeded generator for callers that want to drive [`sample_mu0`] directly.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    chunk_rng(seed, 0)
}

/// Address length `L` with `P(L = n) = p·qⁿ`, by inversion:
/// `L = ⌊ln(1 − u) / ln q⌋`.
#[inline]
pub fn geometric_length<T: Real>(p: T, u: T) -> u64 {
    if p >= T::one() {
        return 0;
    }
    // ln q computed as ln(1 − p) keeps precision when q is near 1.
    let l = (-u).ln_1p() / (-p).ln_1p();
    if !(l >= T::zero()) {
        return 0;
    }
    l.floor().to_u64().unwrap_or(u64::MAX)
}

/// Points sampled from the orbital measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch<T> {
    pub points: Vec<Point<T>>,
    pub seed: u64,
    pub count: usize,
    pub generator_id: String,
}

impl<T: Real> SampleBatch<T> {
    fn new(points: Vec<Point<T>>, seed: u64) -> Self {
        Self { count: points.len(), points, seed, generator_id: GENERATOR_ID.to_owned() }
    }

    pub fn dim(&self) -> usize {
        self.points.first().map(|p| p.dim()).unwrap_or(1)
    }
}

struct Orbit<'a, T> {
    sys: &'a CondensationSystem<T>,
    mu0: Mu0Draw<'a, T>,
    map_cumulative: Vec<T>,
}

impl<'a, T: Real> Orbit<'a, T> {
    fn new(sys: &'a CondensationSystem<T>, mu0: &'a Mu0Spec<T>) -> Result<Self> {
        if mu0.dim() != sys.dim() {
            return Err(Error::DimensionMismatch { expected: sys.dim(), found: mu0.dim() });
        }
        Ok(Self { sys, mu0: Mu0Draw::new(mu0)?, map_cumulative: cumulative(sys.ifs().probs()) })
    }

    #[inline]
    fn random_map(&self, rng: &mut ChaCha20Rng, x: Point<T>) -> Point<T> {
        let j = pick(&self.map_cumulative, uniform(rng));
        self.sys.ifs().maps()[j].eval(x)
    }

    /// One exact draw and its address length.
    ///
    /// The symbols are drawn innermost first and applied as they are
    /// drawn; they are i.i.d., so this is `f_{σ₁}∘⋯∘f_{σ_L}(x)` for a
    /// uniformly random address of length `L`.
    fn exact(&self, rng: &mut ChaCha20Rng) -> (Point<T>, u64) {
        let len = geometric_length(self.sys.p(), uniform(rng));
        let mut x = self.mu0.draw(rng);
        for _ in 0..len {
            x = self.random_map(rng, x);
        }
        (x, len)
    }
}

/// Exact i.i.d. draws from the orbital measure.
pub fn sample_orbital<T: Real>(
    sys: &CondensationSystem<T>,
    mu0: &Mu0Spec<T>,
    seed: u64,
    count: usize,
) -> Result<SampleBatch<T>> {
    Ok(sample_orbital_traced(sys, mu0, seed, count)?.0)
}

/// [`sample_orbital`] plus the address length behind every point.
pub fn sample_orbital_traced<T: Real>(
    sys: &CondensationSystem<T>,
    mu0: &Mu0Spec<T>,
    seed: u64,
    count: usize,
) -> Result<(SampleBatch<T>, Vec<u64>)> {
    if count == 0 {
        return Err(Error::ZeroCount);
    }
    let orbit = Orbit::new(sys, mu0)?;
    let parts: Vec<(Vec<Point<T>>, Vec<u64>)> = chunks(count)
        .map(|(c, n)| {
            let mut rng = chunk_rng(seed, c as u64);
            (0..n).map(|_| orbit.exact(&mut rng)).unzip()
        })
        .collect();
    let (mut points, mut lengths) = (Vec::with_capacity(count), Vec::with_capacity(count));
    for (p, l) in parts {
        points.extend(p);
        lengths.extend(l);
    }
    Ok((SampleBatch::new(points, seed), lengths))
}

/// Chaos game with restart, recording every `stride`-th state.
///
/// Each step restarts from μ₀ with probability `p` and otherwise applies a
/// random map. Every chunk's chain starts from one exact draw, so the chain
/// is stationary from its first recorded state.
pub fn chaos_game_restart<T: Real>(
    sys: &CondensationSystem<T>,
    mu0: &Mu0Spec<T>,
    seed: u64,
    count: usize,
    stride: usize,
) -> Result<SampleBatch<T>> {
    Ok(chaos_game_traced(sys, mu0, seed, count, stride)?.0)
}

/// [`chaos_game_restart`] plus, for every recorded state, whether a restart
/// happened since the previous record. These flags delimit the regeneration
/// blocks used by [`block_bootstrap_ks_quantile`].
pub fn chaos_game_traced<T: Real>(
    sys: &CondensationSystem<T>,
    mu0: &Mu0Spec<T>,
    seed: u64,
    count: usize,
    stride: usize,
) -> Result<(SampleBatch<T>, Vec<bool>)> {
    if count == 0 {
        return Err(Error::ZeroCount);
    }
    if stride == 0 {
        return Err(Error::ZeroStride);
    }
    let orbit = Orbit::new(sys, mu0)?;
    let p = sys.p();
    let parts: Vec<(Vec<Point<T>>, Vec<bool>)> = chunks(count)
        .map(|(c, n)| {
            let mut rng = chunk_rng(seed, CHAOS_STREAM | c as u64);
            let mut x = orbit.exact(&mut rng).0;
            let mut out = (Vec::with_capacity(n), Vec::with_capacity(n));
            // The initial state opens a block of its own.
            let mut restarted = true;
            while out.0.len() < n {
                for _ in 0..stride {
                    if uniform::<T>(&mut rng) < p {
                        x = orbit.mu0.draw(&mut rng);
                        restarted = true;
                    } else {
                        x = orbit.random_map(&mut rng, x);
                    }
                }
                out.0.push(x);
                out.1.push(restarted);
                restarted = false;
            }
            out
        })
        .collect();
    let (mut points, mut flags) = (Vec::with_capacity(count), Vec::with_capacity(count));
    for (p, f) in parts {
        points.extend(p);
        flags.extend(f);
    }
    Ok((SampleBatch::new(points, seed), flags))
}

/// Equal weights on the sampled points.
pub fn empirical_measure<T: Real>(batch: &SampleBatch<T>) -> Result<DiscreteMeasure<T>> {
    if batch.points.is_empty() {
        return Err(Error::EmptyBatch);
    }
    DiscreteMeasure::uniform(batch.dim(), batch.points.clone())
}

/// Splits a run at every flagged index. Index 0 always opens a block.
pub fn regeneration_blocks(starts: &[bool]) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut open = 0;
    for (i, &s) in starts.iter().enumerate().skip(1) {
        if s {
            blocks.push(open..i);
            open = i;
        }
    }
    if !starts.is_empty() {
        blocks.push(open..starts.len());
    }
    blocks
}

/// Upper `level` quantile of the KS distance between the empirical CDF of
/// `values` and that of a block-bootstrap resample.
///
/// Blocks are drawn with replacement until the resample is at least as long
/// as the original. With singleton blocks this is the ordinary i.i.d.
/// bootstrap.
pub fn block_bootstrap_ks_quantile(
    values: &[f64],
    blocks: &[Range<usize>],
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<f64> {
    if values.is_empty() || blocks.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(level > 0.0 && level < 1.0) || replicates == 0 {
        return Err(Error::InvalidArgument("bootstrap needs replicates ≥ 1 and level in (0, 1)".into()));
    }
    // Rank every value among the distinct support points; each block becomes
    // a short list of ranks.
    let mut support: Vec<f64> = values.to_vec();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let rank = |v: f64| support.partition_point(|&s| s < v);
    let ranked: Vec<usize> = values.iter().map(|&v| rank(v)).collect();
    let mut base = vec![0u64; support.len()];
    for &r in &ranked {
        base[r] += 1;
    }
    let n = values.len();

    let mut stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = chunk_rng(seed, b as u64);
            let mut counts = vec![0u64; support.len()];
            let mut len = 0usize;
            while len < n {
                let blk = &blocks[rng.random_range(0..blocks.len())];
                for &r in &ranked[blk.clone()] {
                    counts[r] += 1;
                }
                len += blk.len();
            }
            let (mut fa, mut fb, mut gap) = (0u64, 0u64, 0.0f64);
            for (a, c) in base.iter().zip(&counts) {
                fa += a;
                fb += c;
                gap = gap.max((fa as f64 / n as f64 - fb as f64 / len as f64).abs());
            }
            gap
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let idx = ((level * replicates as f64).ceil() as usize).clamp(1, replicates) - 1;
    Ok(stats[idx])
}
