//! Experiment files: schema, loading, validation and canonical hashing.
//!
//! An experiment file is a JSON document with top-level keys `version`,
//! `materials`, `csl`, `mass_model`, `thermal`, `quadrature` and `task`.
//! Everything is SI: metres, kg/m³, 1/s, kelvin, watts. See `docs/schema.md`
//! for the full layout.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::ThermalModel;
use crate::error::SpecError;
use crate::geometry::{Layer, MassModel, Material, MaterialRef, Shape};

pub const SCHEMA_VERSION: u32 = 1;

/// The two free parameters of the collapse model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CslParams {
    /// Collapse rate λ [1/s].
    #[serde(alias = "lambda")]
    pub lambda_rate: f64,
    /// Noise correlation length r_C [m].
    pub r_c: f64,
}

impl CslParams {
    pub fn new(lambda_rate: f64, r_c: f64) -> Self {
        Self { lambda_rate, r_c }
    }

    pub fn with_lambda(self, lambda_rate: f64) -> Self {
        Self { lambda_rate, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Cutoff on |k|·r_C.
    pub u_max: f64,
    pub mc_samples: usize,
    pub rng_seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            u_max: 8.0,
            mc_samples: 200_000,
            rng_seed: 1,
        }
    }
}

/// Correlation-length grid: explicit values or a log-spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RcGrid {
    Values(Vec<f64>),
    LogRange { min: f64, max: f64, points: usize },
}

impl RcGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            RcGrid::Values(v) => v.clone(),
            RcGrid::LogRange { min, max, points } => log_grid(*min, *max, *points),
        }
    }
}

/// `points` log-spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        n => {
            let (lo, hi) = (min.ln(), max.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        min
                    } else if i + 1 == n {
                        max
                    } else {
                        (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuTask {
    pub k_from: [f64; 3],
    pub k_to: [f64; 3],
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTask {
    pub rc_grid: RcGrid,
    /// When present, every row also carries the λ bound for this power [W].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_power: Option<f64>,
}

/// A family of alternating two-material stacks sharing total mass, mass
/// ratio and cross-section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackFamily<M = Material> {
    pub material_a: M,
    pub material_b: M,
    pub lx: f64,
    pub ly: f64,
    pub total_mass: f64,
    /// Mass of material A over mass of material B. Defaults to ρ_A/ρ_B,
    /// i.e. equal total thickness of both materials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeTask<M = Material> {
    #[serde(flatten)]
    pub family: StackFamily<M>,
    /// Layer-count bounds are checked when the designs are built; an empty
    /// range or a zero count is an infeasible design.
    pub n_layers_min: usize,
    pub n_layers_max: usize,
}

fn default_threshold() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminateTask<M = Material> {
    #[serde(flatten)]
    pub family: StackFamily<M>,
    pub layer_counts: Vec<usize>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTask {
    /// Measured excess heating power [W].
    pub observed_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeCheckTask {
    pub random_lattices: usize,
    pub sites_per_lattice: usize,
    pub seed: u64,
}

impl Default for LatticeCheckTask {
    fn default() -> Self {
        Self {
            random_lattices: 100,
            sites_per_lattice: 32,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "M: Deserialize<'de>"))]
pub struct TaskSpec<M = Material> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<MuTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeTask<M>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminate: Option<DiscriminateTask<M>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_check: Option<LatticeCheckTask>,
}

impl<M> Default for TaskSpec<M> {
    fn default() -> Self {
        Self {
            mu: None,
            scan: None,
            optimize: None,
            discriminate: None,
            bound: None,
            lattice_check: None,
        }
    }
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

/// A complete, resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "M: Deserialize<'de>"))]
pub struct ExperimentSpec<M = Material> {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub materials: BTreeMap<String, f64>,
    pub csl: CslParams,
    pub mass_model: MassModel<M>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<ThermalModel>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub task: TaskSpec<M>,
}

/// One failed invariant, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Read, resolve and validate an experiment file.
pub fn load_spec(path: impl AsRef<Path>) -> Result<ExperimentSpec, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec(&text)
}

/// [`load_spec`] on an in-memory document.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, SpecError> {
    let raw: ExperimentSpec<MaterialRef> = serde_json::from_str(text).map_err(|e| SpecError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let spec = resolve(raw)?;
    let violations = validate_spec(&spec);
    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(SpecError::Validation(violations))
    }
}

/// Pretty JSON for a resolved spec; [`parse_spec`] reads it back unchanged.
pub fn to_json(spec: &ExperimentSpec) -> String {
    serde_json::to_string_pretty(spec).expect("experiment spec serializes")
}

/// SHA-256 of the canonical form of a JSON document: keys sorted, no
/// insignificant whitespace.
pub fn canonical_hash(text: &str) -> Result<String, SpecError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| SpecError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let canonical = serde_json::to_string(&value).expect("json value serializes");
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

struct Resolver<'a> {
    table: &'a BTreeMap<String, f64>,
    violations: Vec<Violation>,
}

impl Resolver<'_> {
    fn material(&mut self, m: MaterialRef, path: &str) -> Material {
        match m {
            MaterialRef::Inline(mat) => mat,
            MaterialRef::Named(name) => match self.table.get(&name) {
                Some(&density) => Material::new(name, density),
                None => {
                    self.violations
                        .push(Violation::new(path, format!("unknown material `{name}`")));
                    Material::new(name, f64::NAN)
                }
            },
        }
    }

    fn model(&mut self, m: MassModel<MaterialRef>, path: &str) -> MassModel {
        let shape = match m.shape {
            Shape::PointMass { mass, position } => Shape::PointMass { mass, position },
            Shape::Cuboid {
                lx,
                ly,
                lz,
                material,
            } => Shape::Cuboid {
                lx,
                ly,
                lz,
                material: self.material(material, &format!("{path}.material")),
            },
            Shape::Sphere { radius, material } => Shape::Sphere {
                radius,
                material: self.material(material, &format!("{path}.material")),
            },
            Shape::Cylinder {
                radius,
                height,
                material,
            } => Shape::Cylinder {
                radius,
                height,
                material: self.material(material, &format!("{path}.material")),
            },
            Shape::LayeredStack { lx, ly, layers } => Shape::LayeredStack {
                lx,
                ly,
                layers: layers
                    .into_iter()
                    .enumerate()
                    .map(|(i, l)| Layer {
                        material: self.material(l.material, &format!("{path}.layers[{i}].material")),
                        thickness: l.thickness,
                    })
                    .collect(),
            },
        };
        MassModel {
            shape,
            offset: m.offset,
        }
    }

    fn family(&mut self, f: StackFamily<MaterialRef>, path: &str) -> StackFamily {
        StackFamily {
            material_a: self.material(f.material_a, &format!("{path}.material_a")),
            material_b: self.material(f.material_b, &format!("{path}.material_b")),
            lx: f.lx,
            ly: f.ly,
            total_mass: f.total_mass,
            mass_ratio: f.mass_ratio,
        }
    }
}

fn resolve(raw: ExperimentSpec<MaterialRef>) -> Result<ExperimentSpec, SpecError> {
    let mut r = Resolver {
        table: &raw.materials,
        violations: Vec::new(),
    };
    let mass_model = r.model(raw.mass_model, "mass_model");
    let task = TaskSpec {
        mu: raw.task.mu,
        scan: raw.task.scan,
        optimize: raw.task.optimize.map(|o| OptimizeTask {
            family: r.family(o.family, "task.optimize"),
            n_layers_min: o.n_layers_min,
            n_layers_max: o.n_layers_max,
        }),
        discriminate: raw.task.discriminate.map(|d| DiscriminateTask {
            family: r.family(d.family, "task.discriminate"),
            layer_counts: d.layer_counts,
            threshold: d.threshold,
        }),
        bound: raw.task.bound,
        lattice_check: raw.task.lattice_check,
    };
    let violations = r.violations;
    if !violations.is_empty() {
        return Err(SpecError::Validation(violations));
    }
    Ok(ExperimentSpec {
        version: raw.version,
        materials: raw.materials,
        csl: raw.csl,
        mass_model,
        thermal: raw.thermal,
        quadrature: raw.quadrature,
        task,
    })
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn positive(&mut self, path: impl Into<String>, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.out.push(Violation::new(path, format!("must be finite and > 0, got {v}")));
        }
    }

    fn non_negative(&mut self, path: impl Into<String>, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.out.push(Violation::new(path, format!("must be finite and >= 0, got {v}")));
        }
    }

    fn finite(&mut self, path: impl Into<String>, v: &[f64]) {
        if v.iter().any(|x| !x.is_finite()) {
            self.out.push(Violation::new(path, "components must be finite"));
        }
    }

    fn require(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.out.push(Violation::new(path, message));
        }
    }

    fn material(&mut self, path: &str, m: &Material) {
        self.positive(format!("{path}.density"), m.density);
    }

    fn model(&mut self, path: &str, m: &MassModel) {
        self.finite(format!("{path}.offset"), &m.offset);
        match &m.shape {
            Shape::PointMass { mass, position } => {
                self.positive(format!("{path}.mass"), *mass);
                self.finite(format!("{path}.position"), position);
            }
            Shape::Cuboid {
                lx,
                ly,
                lz,
                material,
            } => {
                self.positive(format!("{path}.lx"), *lx);
                self.positive(format!("{path}.ly"), *ly);
                self.positive(format!("{path}.lz"), *lz);
                self.material(&format!("{path}.material"), material);
            }
            Shape::Sphere { radius, material } => {
                self.positive(format!("{path}.radius"), *radius);
                self.material(&format!("{path}.material"), material);
            }
            Shape::Cylinder {
                radius,
                height,
                material,
            } => {
                self.positive(format!("{path}.radius"), *radius);
                self.positive(format!("{path}.height"), *height);
                self.material(&format!("{path}.material"), material);
            }
            Shape::LayeredStack { lx, ly, layers } => {
                self.positive(format!("{path}.lx"), *lx);
                self.positive(format!("{path}.ly"), *ly);
                self.require(!layers.is_empty(), format!("{path}.layers"), "needs at least one layer");
                for (i, l) in layers.iter().enumerate() {
                    self.positive(format!("{path}.layers[{i}].thickness"), l.thickness);
                    self.material(&format!("{path}.layers[{i}].material"), &l.material);
                }
            }
        }
        let mass = m.total_mass();
        if self.out.is_empty() {
            self.positive(format!("{path}.total_mass"), mass);
        }
    }

    fn family(&mut self, path: &str, f: &StackFamily) {
        self.material(&format!("{path}.material_a"), &f.material_a);
        self.material(&format!("{path}.material_b"), &f.material_b);
        self.positive(format!("{path}.lx"), f.lx);
        self.positive(format!("{path}.ly"), f.ly);
        self.positive(format!("{path}.total_mass"), f.total_mass);
        if let Some(r) = f.mass_ratio {
            self.positive(format!("{path}.mass_ratio"), r);
        }
    }
}

/// Every invariant violation in `spec`; empty when the spec is valid.
pub fn validate_spec(spec: &ExperimentSpec) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    c.require(
        spec.version == SCHEMA_VERSION,
        "version",
        format!("unsupported schema version {} (expected {SCHEMA_VERSION})", spec.version),
    );
    for (name, &density) in &spec.materials {
        c.positive(format!("materials.{name}"), density);
    }
    c.non_negative("csl.lambda_rate", spec.csl.lambda_rate);
    c.positive("csl.r_c", spec.csl.r_c);
    c.model("mass_model", &spec.mass_model);
    if let Some(t) = &spec.thermal {
        c.non_negative("thermal.gamma_th", t.gamma_th);
        c.non_negative("thermal.temperature", t.temperature);
    }
    let q = &spec.quadrature;
    c.require(
        q.rel_tol > 0.0 && q.rel_tol < 1e-2,
        "quadrature.rel_tol",
        format!("must lie in (0, 1e-2), got {}", q.rel_tol),
    );
    c.require(
        q.u_max.is_finite() && q.u_max >= 6.0,
        "quadrature.u_max",
        format!("must be >= 6, got {}", q.u_max),
    );
    c.require(
        q.mc_samples >= 1000,
        "quadrature.mc_samples",
        format!("must be >= 1000, got {}", q.mc_samples),
    );

    let t = &spec.task;
    if let Some(mu) = &t.mu {
        c.finite("task.mu.k_from", &mu.k_from);
        c.finite("task.mu.k_to", &mu.k_to);
        c.require(mu.points >= 1, "task.mu.points", "must be >= 1");
    }
    if let Some(scan) = &t.scan {
        match &scan.rc_grid {
            RcGrid::Values(v) => {
                c.require(!v.is_empty(), "task.scan.rc_grid", "must not be empty");
                for (i, &x) in v.iter().enumerate() {
                    c.positive(format!("task.scan.rc_grid[{i}]"), x);
                }
                c.require(
                    v.windows(2).all(|w| w[0] < w[1]),
                    "task.scan.rc_grid",
                    "must be strictly increasing",
                );
            }
            RcGrid::LogRange { min, max, points } => {
                c.positive("task.scan.rc_grid.min", *min);
                c.positive("task.scan.rc_grid.max", *max);
                c.require(*points >= 1, "task.scan.rc_grid.points", "must be >= 1");
                c.require(
                    *points == 1 || min < max,
                    "task.scan.rc_grid",
                    "min must be below max",
                );
            }
        }
        if let Some(p) = scan.observed_power {
            c.non_negative("task.scan.observed_power", p);
        }
    }
    if let Some(o) = &t.optimize {
        c.family("task.optimize", &o.family);
    }
    if let Some(d) = &t.discriminate {
        c.family("task.discriminate", &d.family);
        c.require(
            d.layer_counts.len() >= 2,
            "task.discriminate.layer_counts",
            "needs at least two designs",
        );
        c.non_negative("task.discriminate.threshold", d.threshold);
    }
    if let Some(b) = &t.bound {
        c.non_negative("task.bound.observed_power", b.observed_power);
    }
    if let Some(l) = &t.lattice_check {
        c.require(l.random_lattices >= 1, "task.lattice_check.random_lattices", "must be >= 1");
        c.require(l.sites_per_lattice >= 1, "task.lattice_check.sites_per_lattice", "must be >= 1");
    }
    c.out
}
