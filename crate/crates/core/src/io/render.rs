//! Grayscale density images of planar measures.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::export::write_atomic;
use crate::measure::{discretize_to_grid, BoundingBox, DiscreteMeasure};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    /// `ln(1 + c / c_min)` where `c_min` is the smallest occupied cell mass.
    Log,
}

impl Scale {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "linear" => Some(Scale::Linear),
            "log" => Some(Scale::Log),
            _ => None,
        }
    }
}

/// An 8-bit image, row 0 at the top of the box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    /// Set when no mass fell inside the box.
    pub empty: bool,
}

impl DensityImage {
    /// Binary PGM (`P5`, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = self.to_pgm();
        write_atomic(path.as_ref(), |w| Ok(w.write_all(&bytes)?))
    }
}

pub fn render_density<T: Real>(
    m: &DiscreteMeasure<T>,
    bbox: &BoundingBox<T>,
    resolution: [usize; 2],
    scale: Scale,
) -> Result<DensityImage> {
    m.expect_dim(2)?;
    if bbox.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: bbox.dim() });
    }
    let grid = discretize_to_grid(m, bbox, &resolution)?;
    let [w, h] = resolution;
    let cells: Vec<f64> = grid.cells().iter().map(|c| c.as_f64()).collect();
    let c_min = cells.iter().copied().filter(|&c| c > 0.0).fold(f64::INFINITY, f64::min);
    let s = |c: f64| match scale {
        Scale::Linear => c,
        Scale::Log if c > 0.0 => (c / c_min).ln_1p(),
        Scale::Log => 0.0,
    };
    let s_max = cells.iter().map(|&c| s(c)).fold(0.0, f64::max);
    let empty = !(s_max > 0.0);
    let mut pixels = vec![0u8; w * h];
    if !empty {
        for row in 0..h {
            let iy = h - 1 - row;
            for ix in 0..w {
                let v = (255.0 * (s(cells[iy * w + ix]) / s_max)).floor();
                pixels[row * w + ix] = v.clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(DensityImage { width: w, height: h, pixels, empty })
}
