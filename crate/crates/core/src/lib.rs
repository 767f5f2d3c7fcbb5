//! Orbital measures of iterated function systems with condensation.
//!
//! Given maps `f_1..f_N` with probabilities `p_1..p_N`, a condensation
//! measure `mu0` and a rate `p` in `(0, 1]`, the orbital measure is the
//! unique probability measure solving
//!
//! ```text
//! mu = p * mu0 + q * F(mu),    F(v) = sum_n p_n * (f_n)_# v,    q = 1 - p
//! ```
//!
//! and equals the series `p * sum_k q^k F^k(mu0)`. This crate computes
//! truncations of that series (by address enumeration or by iterating the
//! transfer operator), samples from the measure exactly and by a restarting
//! chaos game, and checks the results against the known error bounds.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.
//!
//! ```
//! use orbital::{enumerate_series, CondensationSystem, Ifs, MapSpec, Measure, Point};
//!
//! let ifs = Ifs::new(vec![MapSpec::affine1d(0.5, 0.5)], vec![1.0]).unwrap();
//! let sys = CondensationSystem::new(ifs, Measure::dirac(Point::d1(0.0)), 0.5).unwrap();
//! let t = enumerate_series(&sys, 3, 0.0).unwrap();
//! assert_eq!(t.tail_bound, 0.0625);
//! assert_eq!(t.measure.len(), 4);
//! ```

pub mod error;
pub mod ifs;
pub mod io;
pub mod measure;
pub mod presets;
pub mod sampler;
pub mod scalar;
pub mod series;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result, Violation, ViolationKind, Violations};
pub use ifs::{
    address_weight, apply_address, apply_map, validate_system, AddressString, CondensationSystem, Ifs, MapSpec,
    NamedKind, NamedMap, RawSystem,
};
pub use measure::{
    canonicalize, cdf_eval, discretize_to_grid, distance, evenly_spaced_directions, ks_distance, normalize,
    sliced_w1_2d, wasserstein1_1d, BoundingBox, DiscreteMeasure, GridMeasure, Point,
};
pub use sampler::{
    block_bootstrap_ks_quantile, chaos_game_restart, chaos_game_traced, empirical_measure, geometric_length,
    regeneration_blocks, sample_mu0, sample_orbital, sample_orbital_traced, seeded_rng, Mu0Spec, SampleBatch,
    CHUNK_SIZE, GENERATOR_ID,
};
pub use scalar::{compensated_sum, KahanSum, Real};
pub use series::{
    address_count, depth_for_tolerance, enumerate_series, enumerate_series_with, neumann_iterate, tail_mass, Route,
    SeriesOptions, TruncatedOrbital, DEFAULT_TERM_BUDGET,
};
pub use transfer::{
    condensation_step, condensation_step_pruned, markov_apply, prune, pushforward, rho_n, rho_step,
};
pub use verify::{
    additivity_check, exercise_closed_interval_probe, exercise_escape_study, exercise_system, fixed_point_residual,
    residual_bound, support_diameter, uniqueness_probe, uniqueness_probe_with, AdditivityReport, AdditivityRow,
    ClosedIntervalRow, EscapeRow, UniquenessReport, SLICED_DIRECTIONS,
};

pub type Measure = DiscreteMeasure<f64>;
pub type Pt = Point<f64>;
pub type Map = MapSpec<f64>;
pub type System = CondensationSystem<f64>;
pub type Truncation = TruncatedOrbital<f64>;
pub type Grid = GridMeasure<f64>;
pub type Box2 = BoundingBox<f64>;
pub type Samples = SampleBatch<f64>;
pub type Mu0 = Mu0Spec<f64>;

pub type Measure32 = DiscreteMeasure<f32>;
pub type System32 = CondensationSystem<f32>;
pub type Truncation32 = TruncatedOrbital<f32>;
