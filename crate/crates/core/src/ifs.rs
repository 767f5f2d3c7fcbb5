//! Iterated function systems with condensation.
//!
//! An [`Ifs`] is a finite list of continuous self-maps with positive
//! probabilities. A [`CondensationSystem`] adds a condensation measure μ₀ and
//! the restart probability `p` (with `q = 1 - p`). No contractivity is
//! assumed anywhere.

use std::fmt;

use crate::error::{Error, Result, Violation, ViolationKind, Violations};
use crate::measure::{DiscreteMeasure, Point};
use crate::scalar::{compensated_sum, Real};

/// Continuous maps that can be referenced by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedKind {
    /// `x ↦ r·x·(1 − x)`
    Logistic,
    /// `x ↦ μ·min(x, 1 − x)`
    Tent,
    /// `x ↦ a·sin(ω·x) + b`
    Sine,
    /// `(x, y) ↦ (sx·sin x, sy·sin y)`
    Sinusoidal,
}

impl NamedKind {
    pub const ALL: [NamedKind; 4] = [Self::Logistic, Self::Tent, Self::Sine, Self::Sinusoidal];

    pub fn name(self) -> &'static str {
        match self {
            Self::Logistic => "logistic",
            Self::Tent => "tent",
            Self::Sine => "sine",
            Self::Sinusoidal => "sinusoidal",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Self::Logistic | Self::Tent => 1,
            Self::Sine => 3,
            Self::Sinusoidal => 2,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::Sinusoidal => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedMap<T> {
    kind: NamedKind,
    params: Vec<T>,
}

impl<T: Real> NamedMap<T> {
    pub fn new(name: &str, params: Vec<T>) -> Result<Self> {
        let kind = NamedKind::from_name(name).ok_or_else(|| Error::UnknownNamedMap(name.to_owned()))?;
        if params.len() != kind.arity() {
            return Err(Error::NamedMapArity { name: name.to_owned(), expected: kind.arity(), found: params.len() });
        }
        Ok(Self { kind, params })
    }

    pub fn kind(&self) -> NamedKind {
        self.kind
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }
}

/// One map of an IFS.
#[derive(Clone, Debug, PartialEq)]
pub enum MapSpec<T> {
    /// `x ↦ a·x + b`
    Affine1D { a: T, b: T },
    /// `x ↦ A·x + t`, `matrix` is row-major.
    Affine2D { matrix: [[T; 2]; 2], translation: [T; 2] },
    Named(NamedMap<T>),
}

impl<T: Real> MapSpec<T> {
    pub fn affine1d(a: T, b: T) -> Self {
        Self::Affine1D { a, b }
    }

    pub fn affine2d(matrix: [[T; 2]; 2], translation: [T; 2]) -> Self {
        Self::Affine2D { matrix, translation }
    }

    pub fn identity(dim: usize) -> Self {
        match dim {
            1 => Self::affine1d(T::one(), T::zero()),
            _ => Self::affine2d([[T::one(), T::zero()], [T::zero(), T::one()]], [T::zero(); 2]),
        }
    }

    pub fn named(name: &str, params: Vec<T>) -> Result<Self> {
        NamedMap::new(name, params).map(Self::Named)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Affine1D { .. } => 1,
            Self::Affine2D { .. } => 2,
            Self::Named(n) => n.kind.dim(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Self::Affine1D { a, b } => a.is_finite() && b.is_finite(),
            Self::Affine2D { matrix, translation } => {
                matrix.iter().flatten().chain(translation).all(|v| v.is_finite())
            }
            Self::Named(n) => n.params.iter().all(|v| v.is_finite()),
        }
    }

    /// Image of `x`; the caller guarantees matching dimensions.
    #[inline]
    pub(crate) fn eval(&self, x: Point<T>) -> Point<T> {
        match self {
            Self::Affine1D { a, b } => Point::d1(*a * x.x() + *b),
            Self::Affine2D { matrix: m, translation: t } => Point::d2(
                m[0][0] * x.x() + m[0][1] * x.y() + t[0],
                m[1][0] * x.x() + m[1][1] * x.y() + t[1],
            ),
            Self::Named(n) => {
                let c = &n.params;
                match n.kind {
                    NamedKind::Logistic => Point::d1(c[0] * x.x() * (T::one() - x.x())),
                    NamedKind::Tent => Point::d1(c[0] * x.x().min(T::one() - x.x())),
                    NamedKind::Sine => Point::d1(c[0] * (c[1] * x.x()).sin() + c[2]),
                    NamedKind::Sinusoidal => Point::d2(c[0] * x.x().sin(), c[1] * x.y().sin()),
                }
            }
        }
    }
}

/// Applies one map to a point.
pub fn apply_map<T: Real>(m: &MapSpec<T>, x: Point<T>) -> Result<Point<T>> {
    if m.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: x.dim() });
    }
    Ok(m.eval(x))
}

/// A finite word over `{1, …, N}`; symbols are 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AddressString {
    symbols: Vec<usize>,
}

impl AddressString {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(symbols: Vec<usize>) -> Self {
        Self { symbols }
    }

    /// Parses a word of decimal digits such as `"121"`.
    pub fn parse(word: &str) -> Result<Self> {
        word.chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad address symbol `{c}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn concat(&self, other: &AddressString) -> AddressString {
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Self { symbols }
    }

    pub fn push(&mut self, symbol: usize) {
        self.symbols.push(symbol);
    }

    pub fn pop(&mut self) -> Option<usize> {
        self.symbols.pop()
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        match self.symbols.iter().find(|&&s| s == 0 || s > n) {
            Some(&symbol) => Err(Error::SymbolOutOfRange { symbol, n }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for AddressString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            return f.write_str("ε");
        }
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 && self.symbols.iter().any(|&s| s > 9) {
                f.write_str(".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Maps with their selection probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Ifs<T> {
    maps: Vec<MapSpec<T>>,
    probs: Vec<T>,
    dim: usize,
}

impl<T: Real> Ifs<T> {
    /// Validates and, when the drift is within [`Real::mass_tol`],
    /// renormalizes the probabilities.
    pub fn new(maps: Vec<MapSpec<T>>, probs: Vec<T>) -> Result<Self> {
        let mut violations = Vec::new();
        let ifs = check_ifs(maps, probs, &mut violations);
        match ifs {
            Some(ifs) if violations.is_empty() => Ok(ifs),
            _ => Err(Error::InvalidSystem(Violations(violations))),
        }
    }

    /// Equal probabilities on every map.
    pub fn uniform(maps: Vec<MapSpec<T>>) -> Result<Self> {
        let n = T::from_usize(maps.len().max(1)).unwrap();
        let probs = vec![T::one() / n; maps.len()];
        Self::new(maps, probs)
    }

    pub fn maps(&self) -> &[MapSpec<T>] {
        &self.maps
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn check_ifs<T: Real>(maps: Vec<MapSpec<T>>, probs: Vec<T>, out: &mut Vec<Violation>) -> Option<Ifs<T>> {
    use ViolationKind::*;
    let before = out.len();
    if maps.is_empty() {
        out.push(Violation::new(EmptyIfs, "maps", "an IFS needs at least one map"));
    }
    let dim = maps.first().map(|m| m.dim()).unwrap_or(1);
    for (i, m) in maps.iter().enumerate() {
        if !m.is_finite() {
            out.push(Violation::new(InvalidMap, format!("maps[{i}]"), "map parameters must be finite"));
        }
        if m.dim() != dim {
            out.push(Violation::new(
                DimensionMismatch,
                format!("maps[{i}]"),
                format!("map has dimension {}, expected {dim}", m.dim()),
            ));
        }
    }
    if probs.len() != maps.len() {
        out.push(Violation::new(
            InvalidProbabilities,
            "map_probs",
            format!("{} probabilities for {} maps", probs.len(), maps.len()),
        ));
    }
    let mut positive = true;
    for (i, &pn) in probs.iter().enumerate() {
        if !(pn.is_finite() && pn > T::zero()) {
            positive = false;
            out.push(Violation::new(InvalidProbabilities, format!("map_probs[{i}]"), "map probabilities must be > 0"));
        }
    }
    let mut probs = probs;
    if positive && !probs.is_empty() {
        let total = compensated_sum(probs.iter().copied());
        if (total - T::one()).abs() > T::mass_tol() {
            out.push(Violation::new(
                InvalidProbabilities,
                "map_probs",
                format!("map probabilities sum to {total}, not 1"),
            ));
        } else if total != T::one() {
            probs.iter_mut().for_each(|v| *v /= total);
        }
    }
    (out.len() == before).then_some(Ifs { maps, probs, dim })
}

/// An IFS together with a condensation measure μ₀ and the probabilities
/// `p > 0`, `q = 1 − p ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CondensationSystem<T> {
    ifs: Ifs<T>,
    mu0: DiscreteMeasure<T>,
    p: T,
    q: T,
}

impl<T: Real> CondensationSystem<T> {
    /// Builds a system with `q = 1 − p`.
    pub fn new(ifs: Ifs<T>, mu0: DiscreteMeasure<T>, p: T) -> Result<Self> {
        validate_system(RawSystem { maps: ifs.maps, map_probs: ifs.probs, p, q: T::one() - p, mu0 })
    }

    pub fn ifs(&self) -> &Ifs<T> {
        &self.ifs
    }

    pub fn mu0(&self) -> &DiscreteMeasure<T> {
        &self.mu0
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.ifs.dim
    }

    /// Same maps and μ₀ with a different restart probability.
    pub fn with_p(&self, p: T) -> Result<Self> {
        Self::new(self.ifs.clone(), self.mu0.clone(), p)
    }

    pub fn with_mu0(&self, mu0: DiscreteMeasure<T>) -> Result<Self> {
        Self::new(self.ifs.clone(), mu0, self.p)
    }
}

/// Unvalidated ingredients of a [`CondensationSystem`].
#[derive(Clone, Debug)]
pub struct RawSystem<T> {
    pub maps: Vec<MapSpec<T>>,
    pub map_probs: Vec<T>,
    pub p: T,
    pub q: T,
    pub mu0: DiscreteMeasure<T>,
}

/// Checks every constraint on a system and reports all violations at once.
/// Probability sums within [`Real::mass_tol`] of one are renormalized.
pub fn validate_system<T: Real>(raw: RawSystem<T>) -> Result<CondensationSystem<T>> {
    use ViolationKind::*;
    let mut out = Vec::new();
    let ifs = check_ifs(raw.maps, raw.map_probs, &mut out);
    let (mut p, mut q) = (raw.p, raw.q);
    let mut pq_ok = true;
    if !(p.is_finite() && p > T::zero()) {
        pq_ok = false;
        out.push(Violation::new(InvalidProbabilities, "p", "p must be > 0"));
    }
    if !(q.is_finite() && q >= T::zero()) {
        pq_ok = false;
        out.push(Violation::new(InvalidProbabilities, "q", "q must be >= 0"));
    }
    if pq_ok {
        let total = p + q;
        if (total - T::one()).abs() > T::mass_tol() {
            out.push(Violation::new(InvalidProbabilities, "p", format!("p + q = {total}, not 1")));
        } else if total != T::one() {
            p /= total;
            q = T::one() - p;
        }
    }
    if let Some(ifs) = &ifs {
        if raw.mu0.dim() != ifs.dim {
            out.push(Violation::new(
                DimensionMismatch,
                "mu0",
                format!("condensation measure has dimension {}, maps have {}", raw.mu0.dim(), ifs.dim),
            ));
        }
    }
    match ifs {
        Some(ifs) if out.is_empty() => Ok(CondensationSystem { ifs, mu0: raw.mu0, p, q }),
        _ => Err(Error::InvalidSystem(Violations(out))),
    }
}

/// `f_{σ₁}(f_{σ₂}(…f_{σ_K}(x)…))`: the last symbol acts first.
pub fn apply_address<T: Real>(ifs: &Ifs<T>, a: &AddressString, x: Point<T>) -> Result<Point<T>> {
    a.check(ifs.len())?;
    if x.dim() != ifs.dim {
        return Err(Error::DimensionMismatch { expected: ifs.dim, found: x.dim() });
    }
    Ok(a.symbols.iter().rev().fold(x, |y, &s| ifs.maps[s - 1].eval(y)))
}

/// Coefficient `p·q^K·p_{σ₁}⋯p_{σ_K}` of an address in the orbital series.
pub fn address_weight<T: Real>(sys: &CondensationSystem<T>, a: &AddressString) -> Result<T> {
    a.check(sys.ifs.len())?;
    if a.is_empty() {
        return Ok(sys.p);
    }
    let k = i32::try_from(a.len()).unwrap_or(i32::MAX);
    let prod = a.symbols.iter().fold(T::one(), |acc, &s| acc * sys.ifs.probs[s - 1]);
    Ok(sys.p * sys.q.powi(k) * prod)
}
