use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("all weights are zero")]
    AllZeroWeights,
    #[error("weight {index} is negative")]
    NegativeWeight { index: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("total mass {mass} is not within tolerance of 1")]
    NotNormalized { mass: f64 },
    #[error("atom count {atoms} does not match weight count {weights}")]
    LengthMismatch { atoms: usize, weights: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension {0} (only 1 and 2 are supported)")]
    UnsupportedDimension(usize),
    #[error("no projection directions given")]
    EmptyDirections,
    #[error("projection direction {index} is not a unit vector")]
    NonUnitDirection { index: usize },
    #[error("bounding box is degenerate (hi must exceed lo on every axis)")]
    DegenerateBox,
    #[error("grid resolution must be at least 1 per axis")]
    ZeroResolution,
    #[error("unknown named map `{0}`")]
    UnknownNamedMap(String),
    #[error("named map `{name}` expects {expected} parameters, got {found}")]
    NamedMapArity { name: String, expected: usize, found: usize },
    #[error("address symbol {symbol} out of range 1..={n}")]
    SymbolOutOfRange { symbol: usize, n: usize },
    #[error("invalid system: {0}")]
    InvalidSystem(Violations),
    #[error("q = {0} is outside [0, 1)")]
    InvalidQ(f64),
    #[error("tolerance {0} is outside (0, 1)")]
    InvalidTolerance(f64),
    #[error("enumeration needs {terms} terms, budget is {budget}")]
    DepthOverflow { terms: u128, budget: u64 },
    #[error("degenerate condensation spec: {0}")]
    DegenerateSpec(String),
    #[error("empty sample batch")]
    EmptyBatch,
    #[error("sample count must be at least 1")]
    ZeroCount,
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("need at least two starting measures")]
    TooFewStarts,
    #[error("condensation measure has mass outside [0, 1/2): {0}")]
    InvalidMu0Support(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema violation: {0}")]
    Schema(Violations),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// What kind of constraint a [`Violation`] breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    InvalidProbabilities,
    DimensionMismatch,
    EmptyIfs,
    InvalidMap,
    InvalidMu0,
    InvalidValue,
    UnknownField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Dotted path of the offending field, e.g. `maps[1].a`.
    pub field: String,
    pub reason: String,
}

impl Violation {
    pub fn new(kind: ViolationKind, field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { kind, field: field.into(), reason: reason.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

/// Non-empty list of violations, reported together.
#[derive(Clone, Debug, PartialEq)]
pub struct Violations(pub Vec<Violation>);

impl Violations {
    pub fn iter(&self) -> impl Iterator<Item = &Violation> {
        self.0.iter()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.0.iter().any(|v| v.kind == kind)
    }

    pub fn at(&self, field: &str) -> Option<&Violation> {
        self.0.iter().find(|v| v.field == field)
    }
}

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
