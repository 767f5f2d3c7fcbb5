//! System configuration documents.
//!
//! A configuration is a JSON object with exactly these top-level keys:
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "maps": [{ "kind": "affine1d", "a": 0.5, "b": 0.5 }],
//!   "map_probs": [1.0],
//!   "p": 0.5,
//!   "mu0": { "kind": "point_mass", "point": [0.0] },
//!   "run": { "depth": 20, "seed": 1 }
//! }
//! ```
//!
//! Map kinds are `affine1d {a, b}`, `affine2d {matrix, translation}` and
//! `named {name, params}`. Condensation kinds are `point_mass {point}`,
//! `atoms {points, weights}`, `uniform_interval {lo, hi}` and
//! `uniform_box {lo, hi}`. `q` is always `1 − p`. Unknown keys anywhere
//! are rejected, and every problem is reported with its field path.

use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result, Violation, ViolationKind, Violations};
use crate::ifs::{validate_system, CondensationSystem, MapSpec, RawSystem};
use crate::measure::{DiscreteMeasure, Point};
use crate::sampler::Mu0Spec;
use crate::series::{depth_for_tolerance, DEFAULT_TERM_BUDGET};

/// Depth used when a configuration gives neither `depth` nor `tolerance`.
pub const DEFAULT_DEPTH: usize = 20;

/// Run parameters; every key is optional.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub depth: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub count: usize,
    pub stride: usize,
    /// Atoms per axis used to discretize a uniform μ₀ for the series.
    pub mu0_atoms: usize,
    pub weight_floor: f64,
    pub prune_tol: f64,
    pub term_budget: u64,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            depth: None,
            tolerance: None,
            seed: 0,
            count: 10_000,
            stride: 1,
            mu0_atoms: 64,
            weight_floor: 0.0,
            prune_tol: 0.0,
            term_budget: DEFAULT_TERM_BUDGET,
            out: None,
        }
    }
}

/// A parsed and validated configuration.
#[derive(Clone, Debug)]
pub struct SystemConfig {
    pub dimension: usize,
    pub maps: Vec<MapSpec<f64>>,
    pub map_probs: Vec<f64>,
    pub p: f64,
    pub mu0: Mu0Spec<f64>,
    pub run: RunConfig,
    system: CondensationSystem<f64>,
}

impl SystemConfig {
    /// The validated system; a non-atomic μ₀ is discretized with
    /// `run.mu0_atoms` atoms per axis.
    pub fn system(&self) -> &CondensationSystem<f64> {
        &self.system
    }

    /// Series depth from `run.depth`, else from `run.tolerance`, else
    /// [`DEFAULT_DEPTH`].
    pub fn depth(&self) -> Result<usize> {
        match (self.run.depth, self.run.tolerance) {
            (Some(d), _) => Ok(d),
            (None, Some(eps)) => depth_for_tolerance(self.system.q(), eps),
            (None, None) => Ok(DEFAULT_DEPTH),
        }
    }
}

pub fn load_config_file(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config(&text)
}

/// Parses and validates a configuration document.
pub fn load_config(document: &str) -> Result<SystemConfig> {
    let value: Value = serde_json::from_str(document)
        .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    let mut cx = Checker::default();
    let Some(top) = cx.object(&value, "") else {
        return Err(Error::Schema(Violations(cx.out)));
    };
    cx.only(top, "", &["dimension", "maps", "map_probs", "p", "mu0", "run"]);

    let dimension = cx.required(top, "", "dimension").and_then(|v| cx.uint(v, "dimension"));
    if let Some(d) = dimension {
        if d != 1 && d != 2 {
            cx.push(ViolationKind::InvalidValue, "dimension", "dimension must be 1 or 2");
        }
    }
    let maps: Option<Vec<MapSpec<f64>>> = cx.required(top, "", "maps").and_then(|v| {
        let items = cx.array(v, "maps")?;
        let parsed: Vec<_> = items.iter().enumerate().map(|(i, m)| cx.map_spec(m, &format!("maps[{i}]"))).collect();
        parsed.into_iter().collect()
    });
    let map_probs = cx.required(top, "", "map_probs").and_then(|v| cx.reals(v, "map_probs"));
    let p = cx.required(top, "", "p").and_then(|v| cx.real(v, "p"));
    let mu0 = cx.required(top, "", "mu0").and_then(|v| cx.mu0(v, "mu0"));
    let run = match top.get("run") {
        Some(v) => cx.run(v),
        None => Some(RunConfig::default()),
    };

    if let (Some(d), Some(maps)) = (dimension, &maps) {
        for (i, m) in maps.iter().enumerate() {
            if m.dim() != d {
                cx.push(
                    ViolationKind::DimensionMismatch,
                    format!("maps[{i}]"),
                    format!("map has dimension {}, config says {d}", m.dim()),
                );
            }
        }
    }
    if let (Some(d), Some(mu0)) = (dimension, &mu0) {
        if mu0.dim() != d {
            cx.push(ViolationKind::DimensionMismatch, "mu0", format!("mu0 has dimension {}, config says {d}", mu0.dim()));
        }
    }
    let (Some(dimension), Some(maps), Some(map_probs), Some(p), Some(mu0), Some(run)) =
        (dimension, maps, map_probs, p, mu0, run)
    else {
        return Err(Error::Schema(Violations(cx.out)));
    };

    // Semantic checks run even after structural problems so that one pass
    // reports everything.
    let system = match mu0.discretize(run.mu0_atoms) {
        Ok(mu0_atoms) => {
            let raw = RawSystem { maps: maps.clone(), map_probs: map_probs.clone(), p, q: 1.0 - p, mu0: mu0_atoms };
            match validate_system(raw) {
                Ok(s) => Some(s),
                Err(Error::InvalidSystem(v)) => {
                    for x in v.0 {
                        if !cx.out.iter().any(|o| o.field == x.field && o.kind == x.kind) {
                            cx.out.push(x);
                        }
                    }
                    None
                }
                Err(other) => return Err(other),
            }
        }
        Err(e) => {
            cx.push(ViolationKind::InvalidMu0, "mu0", e.to_string());
            None
        }
    };
    let system = match system {
        Some(s) if cx.out.is_empty() => s,
        _ => return Err(Error::Schema(Violations(cx.out))),
    };
    Ok(SystemConfig { dimension, maps, map_probs, p, mu0, run, system })
}

#[derive(Default)]
struct Checker {
    out: Vec<Violation>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_owned()
    } else {
        format!("{path}.{key}")
    }
}

impl Checker {
    fn push(&mut self, kind: ViolationKind, field: impl Into<String>, reason: impl Into<String>) {
        self.out.push(Violation::new(kind, field, reason));
    }

    fn object<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Map<String, Value>> {
        let o = v.as_object();
        if o.is_none() {
            let field = if path.is_empty() { "<document>" } else { path };
            self.push(ViolationKind::InvalidValue, field, "expected an object");
        }
        o
    }

    fn only(&mut self, o: &Map<String, Value>, path: &str, allowed: &[&str]) {
        for k in o.keys() {
            if !allowed.contains(&k.as_str()) {
                self.push(ViolationKind::UnknownField, join(path, k), "unknown key");
            }
        }
    }

    fn required<'v>(&mut self, o: &'v Map<String, Value>, path: &str, key: &str) -> Option<&'v Value> {
        let v = o.get(key);
        if v.is_none() {
            self.push(ViolationKind::InvalidValue, join(path, key), "missing required key");
        }
        v
    }

    fn array<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Vec<Value>> {
        let a = v.as_array();
        if a.is_none() {
            self.push(ViolationKind::InvalidValue, path, "expected an array");
        }
        a
    }

    fn real(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(ViolationKind::InvalidValue, path, "expected a finite number");
                None
            }
        }
    }

    fn uint(&mut self, v: &Value, path: &str) -> Option<usize> {
        match v.as_u64() {
            Some(x) => Some(x as usize),
            None => {
                self.push(ViolationKind::InvalidValue, path, "expected a non-negative integer");
                None
            }
        }
    }

    fn reals(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let items = self.array(v, path)?;
        let parsed: Vec<_> = items.iter().enumerate().map(|(i, x)| self.real(x, &format!("{path}[{i}]"))).collect();
        parsed.into_iter().collect()
    }

    fn fixed<const N: usize>(&mut self, v: &Value, path: &str) -> Option<[f64; N]> {
        let xs = self.reals(v, path)?;
        match <[f64; N]>::try_from(xs) {
            Ok(a) => Some(a),
            Err(xs) => {
                self.push(ViolationKind::InvalidValue, path, format!("expected {N} numbers, got {}", xs.len()));
                None
            }
        }
    }

    fn point(&mut self, v: &Value, path: &str) -> Option<Point<f64>> {
        let xs = self.reals(v, path)?;
        match Point::from_slice(&xs) {
            Ok(p) => Some(p),
            Err(e) => {
                self.push(ViolationKind::InvalidValue, path, e.to_string());
                None
            }
        }
    }

    fn kind<'v>(&mut self, o: &'v Map<String, Value>, path: &str) -> Option<&'v str> {
        let v = self.required(o, path, "kind")?;
        let k = v.as_str();
        if k.is_none() {
            self.push(ViolationKind::InvalidValue, join(path, "kind"), "expected a string");
        }
        k
    }

    fn map_spec(&mut self, v: &Value, path: &str) -> Option<MapSpec<f64>> {
        let o = self.object(v, path)?;
        let kind = self.kind(o, path)?;
        match kind {
            "affine1d" => {
                self.only(o, path, &["kind", "a", "b"]);
                let a = self.required(o, path, "a").and_then(|v| self.real(v, &join(path, "a")));
                let b = self.required(o, path, "b").and_then(|v| self.real(v, &join(path, "b")));
                Some(MapSpec::affine1d(a?, b?))
            }
            "affine2d" => {
                self.only(o, path, &["kind", "matrix", "translation"]);
                let mpath = join(path, "matrix");
                let matrix = self.required(o, path, "matrix").and_then(|v| {
                    let rows = self.array(v, &mpath)?;
                    if rows.len() != 2 {
                        self.push(ViolationKind::InvalidMap, mpath.clone(), "matrix must have 2 rows");
                        return None;
                    }
                    let r0 = self.fixed::<2>(&rows[0], &format!("{mpath}[0]"));
                    let r1 = self.fixed::<2>(&rows[1], &format!("{mpath}[1]"));
                    Some([r0?, r1?])
                });
                let t = self.required(o, path, "translation").and_then(|v| self.fixed::<2>(v, &join(path, "translation")));
                Some(MapSpec::affine2d(matrix?, t?))
            }
            "named" => {
                self.only(o, path, &["kind", "name", "params"]);
                let name = self.required(o, path, "name").and_then(|v| {
                    let s = v.as_str();
                    if s.is_none() {
                        self.push(ViolationKind::InvalidValue, join(path, "name"), "expected a string");
                    }
                    s
                });
                let params = match o.get("params") {
                    Some(v) => self.reals(v, &join(path, "params")),
                    None => Some(vec![]),
                };
                match MapSpec::named(name?, params?) {
                    Ok(m) => Some(m),
                    Err(e) => {
                        self.push(ViolationKind::InvalidMap, join(path, "name"), e.to_string());
                        None
                    }
                }
            }
            other => {
                self.push(ViolationKind::InvalidMap, join(path, "kind"), format!("unknown map kind `{other}`"));
                None
            }
        }
    }

    fn mu0(&mut self, v: &Value, path: &str) -> Option<Mu0Spec<f64>> {
        let o = self.object(v, path)?;
        let kind = self.kind(o, path)?;
        let spec = match kind {
            "point_mass" => {
                self.only(o, path, &["kind", "point"]);
                let p = self.required(o, path, "point").and_then(|v| self.point(v, &join(path, "point")));
                Mu0Spec::PointMass(p?)
            }
            "atoms" => {
                self.only(o, path, &["kind", "points", "weights"]);
                let ppath = join(path, "points");
                let points = self.required(o, path, "points").and_then(|v| {
                    let items = self.array(v, &ppath)?;
                    let parsed: Vec<_> =
                        items.iter().enumerate().map(|(i, x)| self.point(x, &format!("{ppath}[{i}]"))).collect();
                    parsed.into_iter().collect::<Option<Vec<_>>>()
                });
                let weights = self.required(o, path, "weights").and_then(|v| self.reals(v, &join(path, "weights")));
                let (points, weights) = (points?, weights?);
                let dim = points.first().map(|p| p.dim()).unwrap_or(1);
                match DiscreteMeasure::new(dim, points, weights) {
                    Ok(m) => Mu0Spec::Atoms(m),
                    Err(e) => {
                        self.push(ViolationKind::InvalidMu0, path, e.to_string());
                        return None;
                    }
                }
            }
            "uniform_interval" => {
                self.only(o, path, &["kind", "lo", "hi"]);
                let lo = self.required(o, path, "lo").and_then(|v| self.real(v, &join(path, "lo")));
                let hi = self.required(o, path, "hi").and_then(|v| self.real(v, &join(path, "hi")));
                Mu0Spec::UniformInterval { lo: lo?, hi: hi? }
            }
            "uniform_box" => {
                self.only(o, path, &["kind", "lo", "hi"]);
                let lo = self.required(o, path, "lo").and_then(|v| self.fixed::<2>(v, &join(path, "lo")));
                let hi = self.required(o, path, "hi").and_then(|v| self.fixed::<2>(v, &join(path, "hi")));
                Mu0Spec::UniformBox { lo: lo?, hi: hi? }
            }
            other => {
                self.push(ViolationKind::InvalidMu0, join(path, "kind"), format!("unknown mu0 kind `{other}`"));
                return None;
            }
        };
        if let Err(e) = spec.validate() {
            self.push(ViolationKind::InvalidMu0, path, e.to_string());
            return None;
        }
        Some(spec)
    }

    fn run(&mut self, v: &Value) -> Option<RunConfig> {
        let o = self.object(v, "run")?;
        self.only(
            o,
            "run",
            &["depth", "tolerance", "seed", "count", "stride", "mu0_atoms", "weight_floor", "prune_tol", "term_budget", "out"],
        );
        let before = self.out.len();
        let mut run = RunConfig::default();
        if let Some(v) = o.get("depth") {
            run.depth = self.uint(v, "run.depth");
        }
        if let Some(v) = o.get("tolerance") {
            run.tolerance = self.real(v, "run.tolerance");
            if let Some(t) = run.tolerance {
                if !(t > 0.0 && t < 1.0) {
                    self.push(ViolationKind::InvalidValue, "run.tolerance", "tolerance must be in (0, 1)");
                }
            }
        }
        if let Some(v) = o.get("seed") {
            match v.as_u64() {
                Some(s) => run.seed = s,
                None => self.push(ViolationKind::InvalidValue, "run.seed", "expected a non-negative integer"),
            }
        }
        for (key, slot) in [("count", &mut run.count), ("stride", &mut run.stride), ("mu0_atoms", &mut run.mu0_atoms)] {
            if let Some(v) = o.get(key) {
                let path = format!("run.{key}");
                if let Some(x) = self.uint(v, &path) {
                    if x == 0 {
                        self.push(ViolationKind::InvalidValue, path, "must be at least 1");
                    }
                    *slot = x;
                }
            }
        }
        for (key, slot) in [("weight_floor", &mut run.weight_floor), ("prune_tol", &mut run.prune_tol)] {
            if let Some(v) = o.get(key) {
                let path = format!("run.{key}");
                if let Some(x) = self.real(v, &path) {
                    if x < 0.0 {
                        self.push(ViolationKind::InvalidValue, path, "must be non-negative");
                    }
                    *slot = x;
                }
            }
        }
        if let Some(v) = o.get("term_budget") {
            if let Some(b) = self.uint(v, "run.term_budget") {
                run.term_budget = b as u64;
            }
        }
        if let Some(v) = o.get("out") {
            match v.as_str() {
                Some(s) => run.out = Some(s.to_owned()),
                None => self.push(ViolationKind::InvalidValue, "run.out", "expected a string"),
            }
        }
        (self.out.len() == before).then_some(run)
    }
}
