//! Shipped configuration documents.

/// `f(x) = ½ + x/2` on the unit interval, μ₀ = δ₀, p = q = ½.
pub const EXERCISE: &str = include_str!("../presets/exercise.cfg");
/// Three half-scale maps of the plane with a point-mass condensation.
pub const SIERPINSKI: &str = include_str!("../presets/sierpinski-condensation.cfg");
/// The four-map fern with a point-mass condensation at the origin.
pub const FERN: &str = include_str!("../presets/fern-condensation.cfg");

pub const ALL: [(&str, &str); 3] = [
    ("exercise.cfg", EXERCISE),
    ("sierpinski-condensation.cfg", SIERPINSKI),
    ("fern-condensation.cfg", FERN),
];
