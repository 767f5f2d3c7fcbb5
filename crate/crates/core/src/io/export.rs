//! CSV and JSON-lines output.
//!
//! Numbers are written in the shortest form that parses back to the same
//! double, so every file round-trips exactly. Files are written to a
//! temporary sibling and renamed into place.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;

use crate::error::{Error, Result};
use crate::measure::{canonical_pairs, DiscreteMeasure, Point};
use crate::sampler::SampleBatch;
use crate::scalar::{KahanSum, Real};
use crate::series::TruncatedOrbital;
use crate::verify::{ClosedIntervalRow, EscapeRow};

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`.
pub fn format_real<T: Real>(x: T) -> String {
    let a = x.abs();
    if x == T::zero() || (a >= T::lit(1e-5) && a < T::lit(1e16)) {
        format!("{x}")
    } else {
        format!("{:e}", x.as_f64())
    }
}

/// Writes through `body` into a temporary file next to `path`, then renames.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn csv_writer(w: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// `x,cdf` rows, one per distinct atom position.
pub fn write_cdf_csv<T: Real>(m: &DiscreteMeasure<T>, w: &mut dyn Write) -> Result<()> {
    m.expect_dim(1)?;
    let (atoms, weights) = canonical_pairs(1, m.iter().collect(), T::zero());
    let mut cum = KahanSum::new();
    let running: Vec<T> = weights
        .iter()
        .map(|&x| {
            cum.add(x);
            cum.value()
        })
        .collect();
    let total = cum.value();
    let mut out = csv_writer(w);
    out.write_record(["x", "cdf"])?;
    for (a, c) in atoms.iter().zip(running) {
        out.write_record([format_real(a.x()), format_real((c / total).min(T::one()))])?;
    }
    out.flush()?;
    Ok(())
}

pub fn export_cdf_csv<T: Real>(m: &DiscreteMeasure<T>, path: impl AsRef<Path>) -> Result<()> {
    m.expect_dim(1)?;
    write_atomic(path.as_ref(), |w| write_cdf_csv(m, w))
}

fn coord_header(dim: usize) -> &'static [&'static str] {
    if dim == 1 {
        &["x"]
    } else {
        &["x", "y"]
    }
}

/// `x[,y],weight` rows in atom order.
pub fn write_atoms_csv<T: Real>(m: &DiscreteMeasure<T>, w: &mut dyn Write) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header: Vec<&str> = coord_header(m.dim()).to_vec();
    header.push("weight");
    out.write_record(&header)?;
    for (a, wt) in m.iter() {
        let mut row: Vec<String> = a.coords().iter().map(|&c| format_real(c)).collect();
        row.push(format_real(wt));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn export_atoms_csv<T: Real>(m: &DiscreteMeasure<T>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), |w| write_atoms_csv(m, w))
}

/// Reads a file written by [`export_atoms_csv`].
pub fn read_atoms_csv(path: impl AsRef<Path>) -> Result<DiscreteMeasure<f64>> {
    let mut rdr = csv::Reader::from_reader(File::open(path)?);
    let header = rdr.headers()?.clone();
    let dim = match header.iter().collect::<Vec<_>>().as_slice() {
        ["x", "weight"] => 1,
        ["x", "y", "weight"] => 2,
        other => return Err(Error::InvalidArgument(format!("unexpected atom header {other:?}"))),
    };
    let (mut atoms, mut weights) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad number `{s}`: {e}"))))
            .collect::<Result<_>>()?;
        atoms.push(Point::from_slice(&vals[..dim])?);
        weights.push(vals[dim]);
    }
    DiscreteMeasure::new(dim, atoms, weights)
}

/// `x[,y]` rows.
pub fn write_samples_csv<T: Real>(batch: &SampleBatch<T>, w: &mut dyn Write) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(coord_header(batch.dim()))?;
    for p in &batch.points {
        out.write_record(p.coords().iter().map(|&c| format_real(c)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn export_samples_csv<T: Real>(batch: &SampleBatch<T>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), |w| write_samples_csv(batch, w))
}

/// `p,mass,mass_over_p` rows.
pub fn write_escape_csv<T: Real>(rows: &[EscapeRow<T>], w: &mut dyn Write) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["p", "mass", "mass_over_p"])?;
    for r in rows {
        out.write_record([format_real(r.p), format_real(r.mass), format_real(r.ratio)])?;
    }
    out.flush()?;
    Ok(())
}

/// `p,w1_to_delta1` rows.
pub fn write_closed_interval_csv<T: Real>(rows: &[ClosedIntervalRow<T>], w: &mut dyn Write) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["p", "w1_to_delta1"])?;
    for r in rows {
        out.write_record([format_real(r.p), format_real(r.w1_to_one)])?;
    }
    out.flush()?;
    Ok(())
}

/// One JSON object describing a truncation.
pub fn truncation_metadata<T: Real>(t: &TruncatedOrbital<T>, p: T, q: T) -> serde_json::Value {
    json!({
        "depth": t.depth,
        "tail_bound": t.tail_bound.as_f64(),
        "raw_mass": t.raw_mass.as_f64(),
        "pruned_mass": t.pruned_mass.as_f64(),
        "route": t.route.name(),
        "atoms": t.measure.len(),
        "p": p.as_f64(),
        "q": q.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{CondensationSystem, Ifs, MapSpec};
    use crate::series::enumerate_series;

    fn to_string(f: impl FnOnce(&mut dyn Write) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn line(pairs: &[(f64, f64)]) -> DiscreteMeasure<f64> {
        let (a, w): (Vec<_>, Vec<_>) = pairs.iter().map(|&(x, w)| (Point::d1(x), w)).unzip();
        DiscreteMeasure::new(1, a, w).unwrap()
    }

    #[test]
    fn cdf_csv_examples() {
        let s = to_string(|w| write_cdf_csv(&line(&[(0.5, 1.0)]), w));
        assert_eq!(s, "x,cdf\n0.5,1\n");
        let s = to_string(|w| write_cdf_csv(&line(&[(1.0, 0.5), (0.0, 0.5)]), w));
        assert_eq!(s, "x,cdf\n0,0.5\n1,1\n");
    }

    #[test]
    fn cdf_csv_of_exercise_truncation() {
        let ifs = Ifs::new(vec![MapSpec::affine1d(0.5, 0.5)], vec![1.0]).unwrap();
        let sys = CondensationSystem::new(ifs, DiscreteMeasure::dirac(Point::d1(0.0)), 0.5).unwrap();
        let t = enumerate_series(&sys, 3, 0.0).unwrap();
        let s = to_string(|w| write_cdf_csv(&t.measure, w));
        let rows: Vec<&str> = s.lines().skip(1).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows[3].ends_with(",1"));
    }

    #[test]
    fn number_format() {
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(1e-20), "1e-20");
        assert_eq!(format_real(-2.5e-7), "-2.5e-7");
        let x = 0.1 + 0.2;
        assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn atoms_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("atoms.csv");
        let m = DiscreteMeasure::new(
            2,
            vec![Point::d2(0.1, 1.0 / 3.0), Point::d2(-7e-9, 2.0)],
            vec![1.0 / 3.0, 2.0 / 3.0],
        )
        .unwrap();
        export_atoms_csv(&m, &path).unwrap();
        let back = read_atoms_csv(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn cdf_rejects_planar() {
        let m = DiscreteMeasure::dirac(Point::d2(0.0, 0.0));
        assert!(matches!(write_cdf_csv(&m, &mut Vec::new()), Err(Error::DimensionMismatch { .. })));
    }
}
