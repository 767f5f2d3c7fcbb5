//! Finite atomic probability measures on the line and the plane, grid
//! histograms, and the distances used to compare them.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, KahanSum, Real};

/// A point of ℝ¹ or ℝ². One-dimensional points keep their second
/// coordinate at zero so that derived comparisons stay consistent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<T> {
    coords: [T; 2],
    dim: u8,
}

impl<T: Real> Point<T> {
    pub fn d1(x: T) -> Self {
        Self { coords: [x, T::zero()], dim: 1 }
    }

    pub fn d2(x: T, y: T) -> Self {
        Self { coords: [x, y], dim: 2 }
    }

    /// Builds a point from a coordinate slice of length 1 or 2.
    pub fn from_slice(c: &[T]) -> Result<Self> {
        let p = match *c {
            [x] => Self::d1(x),
            [x, y] => Self::d2(x, y),
            _ => return Err(Error::UnsupportedDimension(c.len())),
        };
        if !p.is_finite() {
            return Err(Error::NonFinite("point"));
        }
        Ok(p)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn x(&self) -> T {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> T {
        self.coords[1]
    }

    pub fn coords(&self) -> &[T] {
        &self.coords[..self.dim()]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    /// Max-norm distance.
    pub fn dist_max(&self, other: &Self) -> T {
        (self.coords[0] - other.coords[0])
            .abs()
            .max((self.coords[1] - other.coords[1]).abs())
    }

    pub fn dist(&self, other: &Self) -> T {
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Lexicographic order on coordinates. Points are finite, so this is total.
    pub fn cmp_lex(&self, other: &Self) -> Ordering {
        cmp_finite(self.coords[0], other.coords[0])
            .then_with(|| cmp_finite(self.coords[1], other.coords[1]))
    }
}

#[inline]
pub(crate) fn cmp_finite<T: Real>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 1 || d == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

/// Scales non-negative weights so they sum to one.
pub fn normalize<T: Real>(weights: &[T]) -> Result<Vec<T>> {
    for (index, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite("weight"));
        }
        if w < T::zero() {
            return Err(Error::NegativeWeight { index });
        }
    }
    let total = compensated_sum(weights.iter().copied());
    if total <= T::zero() {
        return Err(Error::AllZeroWeights);
    }
    Ok(weights.iter().map(|&w| w / total).collect())
}

/// A probability measure given by finitely many weighted atoms.
///
/// Atoms may repeat; [`canonicalize`] merges them. The weights always sum to
/// one within [`Real::mass_tol`], and the sum seen at construction is kept in
/// [`raw_mass`](Self::raw_mass).
#[derive(Clone, Debug)]
pub struct DiscreteMeasure<T> {
    dim: usize,
    atoms: Vec<Point<T>>,
    weights: Vec<T>,
    raw_mass: T,
}

/// Equality of atoms and weights, in order.
impl<T: PartialEq> PartialEq for DiscreteMeasure<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.atoms == other.atoms && self.weights == other.weights
    }
}

impl<T: Real> DiscreteMeasure<T> {
    /// Checks the atoms and weights and renormalizes small drift. A mass
    /// further than [`Real::mass_tol`] from one is rejected.
    pub fn new(dim: usize, atoms: Vec<Point<T>>, weights: Vec<T>) -> Result<Self> {
        let raw = Self::checked_mass(dim, &atoms, &weights)?;
        if (raw - T::one()).abs() > T::mass_tol() {
            return Err(Error::NotNormalized { mass: raw.as_f64() });
        }
        let drift = T::epsilon() * T::from_usize(4 * weights.len().max(1)).unwrap();
        let weights = if (raw - T::one()).abs() <= drift {
            weights
        } else {
            weights.into_iter().map(|w| w / raw).collect()
        };
        Ok(Self { dim, atoms, weights, raw_mass: raw })
    }

    /// Like [`new`](Self::new) but accepts any positive total mass and
    /// scales it to one.
    pub fn from_unnormalized(dim: usize, atoms: Vec<Point<T>>, weights: Vec<T>) -> Result<Self> {
        let raw = Self::checked_mass(dim, &atoms, &weights)?;
        let weights = normalize(&weights)?;
        Ok(Self { dim, atoms, weights, raw_mass: raw })
    }

    pub(crate) fn from_weighted(dim: usize, pairs: Vec<(Point<T>, T)>) -> Result<Self> {
        let (atoms, weights) = pairs.into_iter().unzip();
        Self::from_unnormalized(dim, atoms, weights)
    }

    /// Assembles a measure whose atoms and weights are already known to be
    /// valid; only the mass is recomputed.
    pub(crate) fn from_parts_unchecked(dim: usize, atoms: Vec<Point<T>>, weights: Vec<T>) -> Self {
        let raw_mass = compensated_sum(weights.iter().copied());
        Self { dim, atoms, weights, raw_mass }
    }

    pub fn dirac(point: Point<T>) -> Self {
        Self { dim: point.dim(), atoms: vec![point], weights: vec![T::one()], raw_mass: T::one() }
    }

    /// Equal weights on the given points.
    pub fn uniform(dim: usize, atoms: Vec<Point<T>>) -> Result<Self> {
        let n = atoms.len();
        let w = T::one() / T::from_usize(n.max(1)).unwrap();
        Self::from_unnormalized(dim, atoms, vec![w; n])
    }

    fn checked_mass(dim: usize, atoms: &[Point<T>], weights: &[T]) -> Result<T> {
        check_dim(dim)?;
        if atoms.len() != weights.len() {
            return Err(Error::LengthMismatch { atoms: atoms.len(), weights: weights.len() });
        }
        for a in atoms {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: a.dim() });
            }
            if !a.is_finite() {
                return Err(Error::NonFinite("atom"));
            }
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite("weight"));
            }
            if w < T::zero() {
                return Err(Error::NegativeWeight { index });
            }
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= T::zero() {
            return Err(Error::AllZeroWeights);
        }
        Ok(total)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Point<T>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point<T>, T)> + '_ {
        self.atoms.iter().copied().zip(self.weights.iter().copied())
    }

    /// Mass of the weights passed at construction, before normalization.
    pub fn raw_mass(&self) -> T {
        self.raw_mass
    }

    pub fn total_mass(&self) -> T {
        compensated_sum(self.weights.iter().copied())
    }

    pub(crate) fn expect_dim(&self, dim: usize) -> Result<()> {
        if self.dim == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: dim, found: self.dim })
        }
    }

    /// Smallest box containing every atom.
    pub fn support_box(&self) -> BoundingBox<T> {
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for a in &self.atoms {
            for k in 0..self.dim {
                lo[k] = lo[k].min(a.coords[k]);
                hi[k] = hi[k].max(a.coords[k]);
            }
        }
        BoundingBox { dim: self.dim, lo, hi }
    }

    /// Euclidean diameter of the support.
    pub fn diameter(&self) -> T {
        self.support_box().diagonal()
    }

    /// Convex combination Σ cᵢ·mᵢ as one (non-canonical) measure.
    pub fn mixture(parts: &[(T, &DiscreteMeasure<T>)]) -> Result<Self> {
        let dim = parts.first().map(|(_, m)| m.dim).ok_or(Error::AllZeroWeights)?;
        let mut pairs = Vec::with_capacity(parts.iter().map(|(_, m)| m.len()).sum());
        for (c, m) in parts {
            m.expect_dim(dim)?;
            pairs.extend(m.iter().map(|(a, w)| (a, *c * w)));
        }
        Self::from_weighted(dim, pairs)
    }
}

/// Merges atoms closer than `merge_tol` in the max-norm and sorts the result
/// lexicographically. Each merged group sits at its lexicographically first
/// atom, so a second pass changes nothing.
pub fn canonicalize<T: Real>(m: &DiscreteMeasure<T>, merge_tol: T) -> DiscreteMeasure<T> {
    let (atoms, weights) = canonical_pairs(m.dim, m.iter().collect(), merge_tol);
    DiscreteMeasure { dim: m.dim, atoms, weights, raw_mass: m.raw_mass }
}

pub(crate) fn canonical_pairs<T: Real>(
    dim: usize,
    mut pairs: Vec<(Point<T>, T)>,
    merge_tol: T,
) -> (Vec<Point<T>>, Vec<T>) {
    pairs.sort_by(|a, b| a.0.cmp_lex(&b.0));
    let mut atoms: Vec<Point<T>> = Vec::with_capacity(pairs.len());
    let mut sums: Vec<KahanSum<T>> = Vec::with_capacity(pairs.len());
    for (p, w) in pairs {
        let mut target = None;
        if merge_tol == T::zero() || dim == 1 {
            // Sorted, so only the last group can be within reach.
            if let Some(last) = atoms.last() {
                if last.dist_max(&p) <= merge_tol {
                    target = Some(atoms.len() - 1);
                }
            }
        } else {
            for i in (0..atoms.len()).rev() {
                if atoms[i].x() < p.x() - merge_tol {
                    break;
                }
                if atoms[i].dist_max(&p) <= merge_tol {
                    target = Some(i);
                    break;
                }
            }
        }
        match target {
            Some(i) => sums[i].add(w),
            None => {
                atoms.push(p);
                let mut s = KahanSum::new();
                s.add(w);
                sums.push(s);
            }
        }
    }
    let weights = sums.iter().map(|s| s.value()).collect();
    (atoms, weights)
}

/// Mass of atoms at or left of `x`.
pub fn cdf_eval<T: Real>(m: &DiscreteMeasure<T>, x: T) -> Result<T> {
    m.expect_dim(1)?;
    let s = compensated_sum(m.iter().filter(|(a, _)| a.x() <= x).map(|(_, w)| w));
    Ok(s.min(T::one()))
}

/// Sorted (position, weight) pairs of a 1-D measure with equal positions merged.
fn sorted_line<T: Real>(m: &DiscreteMeasure<T>) -> Vec<(T, T)> {
    let (atoms, weights) = canonical_pairs(1, m.iter().collect(), T::zero());
    atoms.into_iter().map(|a| a.x()).zip(weights).collect()
}

/// Walks the merged support of two 1-D measures, yielding each position with
/// both CDFs evaluated there.
fn merged_cdfs<T: Real>(a: &[(T, T)], b: &[(T, T)]) -> Vec<(T, T, T)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (KahanSum::new(), KahanSum::new());
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(u), Some(v)) => u.0.min(v.0),
            (Some(u), None) => u.0,
            (None, Some(v)) => v.0,
            (None, None) => unreachable!(),
        };
        if i < a.len() && a[i].0 == x {
            fa.add(a[i].1);
            i += 1;
        }
        if j < b.len() && b[j].0 == x {
            fb.add(b[j].1);
            j += 1;
        }
        out.push((x, fa.value(), fb.value()));
    }
    out
}

/// Wasserstein-1 distance ∫|F_a − F_b| dx between two 1-D measures.
pub fn wasserstein1_1d<T: Real>(a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>) -> Result<T> {
    a.expect_dim(1)?;
    b.expect_dim(1)?;
    Ok(w1_sorted(&sorted_line(a), &sorted_line(b)))
}

fn w1_sorted<T: Real>(a: &[(T, T)], b: &[(T, T)]) -> T {
    let steps = merged_cdfs(a, b);
    let mut acc = KahanSum::new();
    for win in steps.windows(2) {
        let (x0, fa, fb) = win[0];
        acc.add((fa - fb).abs() * (win[1].0 - x0));
    }
    acc.value()
}

/// Kolmogorov–Smirnov distance sup|F_a − F_b| between two 1-D measures.
pub fn ks_distance<T: Real>(a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>) -> Result<T> {
    a.expect_dim(1)?;
    b.expect_dim(1)?;
    let gap = merged_cdfs(&sorted_line(a), &sorted_line(b))
        .into_iter()
        .map(|(_, fa, fb)| (fa - fb).abs())
        .fold(T::zero(), T::max);
    Ok(gap.min(T::one()))
}

/// `k` unit vectors at angles `iπ/k`, which cover every projection axis up
/// to sign.
pub fn evenly_spaced_directions<T: Real>(k: usize) -> Vec<[T; 2]> {
    let pi = T::lit(std::f64::consts::PI);
    let kt = T::from_usize(k.max(1)).unwrap();
    (0..k)
        .map(|i| {
            let theta = pi * T::from_usize(i).unwrap() / kt;
            [theta.cos(), theta.sin()]
        })
        .collect()
}

/// Mean of the 1-D Wasserstein-1 distances between the projections of two
/// planar measures onto each direction.
pub fn sliced_w1_2d<T: Real>(
    a: &DiscreteMeasure<T>,
    b: &DiscreteMeasure<T>,
    directions: &[[T; 2]],
) -> Result<T> {
    a.expect_dim(2)?;
    b.expect_dim(2)?;
    if directions.is_empty() {
        return Err(Error::EmptyDirections);
    }
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(16.0));
    for (index, d) in directions.iter().enumerate() {
        let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if (norm - T::one()).abs() > tol {
            return Err(Error::NonUnitDirection { index });
        }
    }
    let project = |m: &DiscreteMeasure<T>, d: &[T; 2]| -> Vec<(T, T)> {
        let mut v: Vec<(T, T)> = m.iter().map(|(p, w)| (p.x() * d[0] + p.y() * d[1], w)).collect();
        v.sort_by(|u, w| cmp_finite(u.0, w.0));
        v.dedup_by(|next, prev| {
            if next.0 == prev.0 {
                prev.1 += next.1;
                true
            } else {
                false
            }
        });
        v
    };
    let total = compensated_sum(directions.iter().map(|d| w1_sorted(&project(a, d), &project(b, d))));
    Ok(total / T::from_usize(directions.len()).unwrap())
}

/// W₁ for 1-D measures, sliced W₁ over `directions` for planar ones.
pub fn distance<T: Real>(a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>, directions: usize) -> Result<T> {
    a.expect_dim(b.dim)?;
    match a.dim {
        1 => wasserstein1_1d(a, b),
        _ => sliced_w1_2d(a, b, &evenly_spaced_directions(directions)),
    }
}

/// Axis-aligned box in ℝ¹ or ℝ².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox<T> {
    dim: usize,
    lo: [T; 2],
    hi: [T; 2],
}

impl<T: Real> BoundingBox<T> {
    pub fn interval(lo: T, hi: T) -> Result<Self> {
        Self::new(&[lo], &[hi])
    }

    pub fn rect(lo: [T; 2], hi: [T; 2]) -> Result<Self> {
        Self::new(&lo, &hi)
    }

    pub fn new(lo: &[T], hi: &[T]) -> Result<Self> {
        check_dim(lo.len())?;
        if hi.len() != lo.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        let mut b = Self { dim: lo.len(), lo: [T::zero(); 2], hi: [T::zero(); 2] };
        for k in 0..b.dim {
            if !(lo[k].is_finite() && hi[k].is_finite() && hi[k] > lo[k]) {
                return Err(Error::DegenerateBox);
            }
            b.lo[k] = lo[k];
            b.hi[k] = hi[k];
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[T] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[T] {
        &self.hi[..self.dim]
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        (0..self.dim).all(|k| p.coords[k] >= self.lo[k] && p.coords[k] <= self.hi[k])
    }

    pub fn diagonal(&self) -> T {
        let mut s = T::zero();
        for k in 0..self.dim {
            let d = self.hi[k] - self.lo[k];
            if d.is_finite() {
                s += d * d;
            }
        }
        s.sqrt()
    }

    /// Grows every side by `frac` of its width (or by `frac` when the width
    /// is zero), making the box usable for binning.
    pub fn padded(&self, frac: T) -> Self {
        let mut b = *self;
        for k in 0..self.dim {
            let w = self.hi[k] - self.lo[k];
            let pad = if w > T::zero() { w * frac } else { frac };
            b.lo[k] = self.lo[k] - pad;
            b.hi[k] = self.hi[k] + pad;
        }
        b
    }

    /// Cell index of `x` along `axis`: half-open cells, the last one closed.
    fn bin(&self, axis: usize, x: T, cells: usize) -> Option<usize> {
        let (lo, hi) = (self.lo[axis], self.hi[axis]);
        if x < lo || x > hi {
            return None;
        }
        if x == hi {
            return Some(cells - 1);
        }
        let t = (x - lo) / (hi - lo) * T::from_usize(cells).unwrap();
        Some(t.floor().to_usize().unwrap_or(0).min(cells - 1))
    }
}

/// Histogram of a measure over a regular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure<T> {
    bbox: BoundingBox<T>,
    resolution: Vec<usize>,
    /// Row-major: the x index varies fastest.
    cells: Vec<T>,
    escaped_mass: T,
}

impl<T: Real> GridMeasure<T> {
    pub fn bbox(&self) -> &BoundingBox<T> {
        &self.bbox
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn escaped_mass(&self) -> T {
        self.escaped_mass
    }

    /// Mass of cell `(ix, iy)`; `iy` is ignored in one dimension.
    pub fn cell(&self, ix: usize, iy: usize) -> T {
        match self.resolution.len() {
            1 => self.cells[ix],
            _ => self.cells[iy * self.resolution[0] + ix],
        }
    }

    pub fn cell_sum(&self) -> T {
        compensated_sum(self.cells.iter().copied())
    }

    /// Merges each run of two cells per axis into one. Odd trailing cells
    /// stay on their own.
    pub fn coarsen(&self) -> Self {
        let res: Vec<usize> = self.resolution.iter().map(|&r| r.div_ceil(2)).collect();
        let nx = self.resolution[0];
        let mut acc = vec![KahanSum::new(); res.iter().product()];
        for (i, &c) in self.cells.iter().enumerate() {
            let (ix, iy) = (i % nx, i / nx);
            let j = if res.len() == 1 { ix / 2 } else { (iy / 2) * res[0] + ix / 2 };
            acc[j].add(c);
        }
        Self {
            bbox: self.bbox,
            resolution: res,
            cells: acc.iter().map(|s| s.value()).collect(),
            escaped_mass: self.escaped_mass,
        }
    }
}

/// Bins every atom into the grid; atoms outside the box count as escaped.
pub fn discretize_to_grid<T: Real>(
    m: &DiscreteMeasure<T>,
    bbox: &BoundingBox<T>,
    resolution: &[usize],
) -> Result<GridMeasure<T>> {
    m.expect_dim(bbox.dim)?;
    if resolution.len() != bbox.dim {
        return Err(Error::DimensionMismatch { expected: bbox.dim, found: resolution.len() });
    }
    if resolution.contains(&0) {
        return Err(Error::ZeroResolution);
    }
    let nx = resolution[0];
    let mut acc = vec![KahanSum::new(); resolution.iter().product()];
    let mut escaped = KahanSum::new();
    for (p, w) in m.iter() {
        let ix = bbox.bin(0, p.x(), nx);
        let idx = if bbox.dim == 1 {
            ix
        } else {
            match (ix, bbox.bin(1, p.y(), resolution[1])) {
                (Some(ix), Some(iy)) => Some(iy * nx + ix),
                _ => None,
            }
        };
        match idx {
            Some(i) => acc[i].add(w),
            None => escaped.add(w),
        }
    }
    Ok(GridMeasure {
        bbox: *bbox,
        resolution: resolution.to_vec(),
        cells: acc.iter().map(|s| s.value()).collect(),
        escaped_mass: escaped.value(),
    })
}
