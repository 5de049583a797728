//! Studies built on the heating rates: thermal leakage, r_C scans, layered
//! design optimization, discriminability and λ bounds.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, CONSTANTS_VERSION};
use crate::error::{AnalysisError, HeatingError};
use crate::experiment::{CslParams, QuadratureSpec, StackFamily};
use crate::geometry::{Layer, MassModel, Material};
use crate::heating::gamma_cm;

/// Environmental heating `Γ_th = γ_th k_B T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalModel {
    /// Damping rate [1/s].
    pub gamma_th: f64,
    /// Bath temperature [K].
    pub temperature: f64,
}

/// Thermal heating power [W]. Independent of the body's geometry.
pub fn thermal_gain(thermal: &ThermalModel) -> f64 {
    thermal.gamma_th * BOLTZMANN * thermal.temperature
}

/// Γ_cm at λ = 1 s⁻¹, i.e. the energy gain per unit collapse rate [J].
fn cm_per_lambda(model: &MassModel, r_c: f64, quad: &QuadratureSpec) -> Result<(f64, f64), HeatingError> {
    let r = gamma_cm(model, &CslParams::new(1.0, r_c), quad)?;
    Ok((r.value, r.reduction_factor))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub r_c: f64,
    /// Γ_cm / λ [J]; absent when the point failed.
    pub gamma_cm_per_lambda: Option<f64>,
    pub reduction_factor: Option<f64>,
    /// λ bound [1/s] for the scan's observed power, when one was given.
    pub lambda_bound: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub axis: String,
    pub rows: Vec<ScanRow>,
    pub spec_hash: Option<String>,
    pub constants_version: String,
}

impl ScanTable {
    /// Indices of rows whose reduction factor exceeds both neighbours.
    /// Rows next to a failed point are never reported.
    pub fn interior_maxima(&self) -> Vec<usize> {
        let v: Vec<Option<f64>> = self.rows.iter().map(|r| r.reduction_factor).collect();
        (1..v.len().saturating_sub(1))
            .filter(|&i| match (v[i - 1], v[i], v[i + 1]) {
                (Some(a), Some(b), Some(c)) => b > a && b >= c,
                _ => false,
            })
            .collect()
    }

    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub const CSV_HEADER: &'static str = "r_c,gamma_cm_per_lambda,reduction_factor,lambda_bound,error";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(r.r_c),
                cell(r.gamma_cm_per_lambda),
                cell(r.reduction_factor),
                cell(r.lambda_bound),
                r.error.as_deref().unwrap_or("").replace(',', ";")
            ));
        }
        out
    }
}

/// 17 significant digits, locale-free.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Γ_cm / λ and the reduction factor over a grid of correlation lengths.
/// Points whose quadrature fails are marked rather than aborting the scan.
pub fn scan_rc(
    model: &MassModel,
    rc_grid: &[f64],
    quad: &QuadratureSpec,
    observed_power: Option<f64>,
) -> Result<ScanTable, AnalysisError> {
    if rc_grid.is_empty() {
        return Err(AnalysisError::ConstraintViolation("empty r_c grid".into()));
    }
    if rc_grid.iter().any(|&r| !(r.is_finite() && r > 0.0)) || rc_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::ConstraintViolation(
            "r_c grid must be positive and strictly increasing".into(),
        ));
    }
    let rows = rc_grid
        .par_iter()
        .map(|&r_c| match cm_per_lambda(model, r_c, quad) {
            Ok((per_lambda, reduction)) => ScanRow {
                r_c,
                gamma_cm_per_lambda: Some(per_lambda),
                reduction_factor: Some(reduction),
                lambda_bound: observed_power.map(|p| bound_from(p, per_lambda).lambda_max),
                error: None,
            },
            Err(e) => ScanRow {
                r_c,
                gamma_cm_per_lambda: None,
                reduction_factor: None,
                lambda_bound: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(ScanTable {
        axis: "r_c".into(),
        rows,
        spec_hash: None,
        constants_version: CONSTANTS_VERSION.into(),
    })
}

/// Alternating A/B stack of a [`StackFamily`]. Every A layer has thickness
/// `thickness_a` and every B layer `thickness_b`; with `n_layers = 1` the
/// body is a single homogeneous slab holding the same masses of A and B
/// blended over the same total thickness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDesign {
    pub n_layers: usize,
    pub material_a: Material,
    pub material_b: Material,
    pub thickness_a: f64,
    pub thickness_b: f64,
    pub lx: f64,
    pub ly: f64,
    pub total_mass: f64,
}

impl LayerDesign {
    fn counts(&self) -> (usize, usize) {
        if self.n_layers == 1 {
            (1, 1)
        } else {
            (self.n_layers.div_ceil(2), self.n_layers / 2)
        }
    }

    pub fn total_thickness(&self) -> f64 {
        let (na, nb) = self.counts();
        na as f64 * self.thickness_a + nb as f64 * self.thickness_b
    }

    pub fn mean_layer_thickness(&self) -> f64 {
        self.total_thickness() / self.n_layers as f64
    }

    /// Masses of material A and material B [kg].
    pub fn material_masses(&self) -> (f64, f64) {
        let (na, nb) = self.counts();
        let area = self.lx * self.ly;
        (
            na as f64 * self.material_a.density * self.thickness_a * area,
            nb as f64 * self.material_b.density * self.thickness_b * area,
        )
    }

    pub fn mass_ratio(&self) -> f64 {
        let (a, b) = self.material_masses();
        a / b
    }

    pub fn layers(&self) -> Vec<Layer> {
        if self.n_layers == 1 {
            let (ma, mb) = self.material_masses();
            let t = self.total_thickness();
            let blend = Material::new(
                format!("{}+{}", self.material_a.name, self.material_b.name),
                (ma + mb) / (self.lx * self.ly * t),
            );
            return vec![Layer {
                material: blend,
                thickness: t,
            }];
        }
        (0..self.n_layers)
            .map(|i| {
                if i % 2 == 0 {
                    Layer {
                        material: self.material_a.clone(),
                        thickness: self.thickness_a,
                    }
                } else {
                    Layer {
                        material: self.material_b.clone(),
                        thickness: self.thickness_b,
                    }
                }
            })
            .collect()
    }

    pub fn layer_thicknesses(&self) -> Vec<f64> {
        self.layers().iter().map(|l| l.thickness).collect()
    }

    pub fn model(&self) -> MassModel {
        MassModel::stack(self.lx, self.ly, self.layers())
    }
}

pub type LayerFamily = StackFamily;

impl StackFamily {
    /// Mass of A over mass of B; defaults to ρ_A / ρ_B.
    pub fn effective_mass_ratio(&self) -> f64 {
        self.mass_ratio
            .unwrap_or(self.material_a.density / self.material_b.density)
    }

    /// The member with `n` layers.
    pub fn design(&self, n: usize) -> Result<LayerDesign, AnalysisError> {
        let area = self.lx * self.ly;
        let ratio = self.effective_mass_ratio();
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if n == 0 {
            return Err(AnalysisError::InfeasibleDesign("a stack needs at least one layer".into()));
        }
        if !(positive(area) && positive(self.total_mass) && positive(ratio)) {
            return Err(AnalysisError::InfeasibleDesign(
                "cross-section, total mass and mass ratio must be positive".into(),
            ));
        }
        if !(positive(self.material_a.density) && positive(self.material_b.density)) {
            return Err(AnalysisError::InfeasibleDesign("densities must be positive".into()));
        }
        let mass_a = self.total_mass * ratio / (1.0 + ratio);
        let mass_b = self.total_mass / (1.0 + ratio);
        let total_a = mass_a / (self.material_a.density * area);
        let total_b = mass_b / (self.material_b.density * area);
        let (na, nb) = if n == 1 { (1, 1) } else { (n.div_ceil(2), n / 2) };
        Ok(LayerDesign {
            n_layers: n,
            material_a: self.material_a.clone(),
            material_b: self.material_b.clone(),
            thickness_a: total_a / na as f64,
            thickness_b: total_b / nb as f64,
            lx: self.lx,
            ly: self.ly,
            total_mass: self.total_mass,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub n_layers: usize,
    pub mean_layer_thickness: f64,
    pub gamma_cm: f64,
    pub reduction_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best: LayerDesign,
    pub gamma_cm: f64,
    pub candidates: Vec<Candidate>,
}

/// Candidates within this relative distance of the best rate count as tied
/// and the one with fewer layers wins.
pub fn tie_tolerance(quad: &QuadratureSpec) -> f64 {
    10.0 * quad.rel_tol
}

/// Exhaustive search over layer counts for the largest Γ_cm at fixed total
/// mass and mass ratio.
pub fn optimize_layers(
    family: &LayerFamily,
    n_layers: RangeInclusive<usize>,
    csl: &CslParams,
    quad: &QuadratureSpec,
) -> Result<OptimizeResult, AnalysisError> {
    if n_layers.is_empty() {
        return Err(AnalysisError::InfeasibleDesign("empty layer-count range".into()));
    }
    let designs = n_layers.map(|n| family.design(n)).collect::<Result<Vec<_>, _>>()?;
    let rates = designs
        .par_iter()
        .map(|d| gamma_cm(&d.model(), csl, quad))
        .collect::<Result<Vec<_>, _>>()?;
    let top = rates.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    let floor = top - tie_tolerance(quad) * top.abs();
    let best = rates
        .iter()
        .position(|r| r.value >= floor)
        .expect("non-empty candidate list");
    let candidates = designs
        .iter()
        .zip(&rates)
        .map(|(d, r)| Candidate {
            n_layers: d.n_layers,
            mean_layer_thickness: d.mean_layer_thickness(),
            gamma_cm: r.value,
            reduction_factor: r.reduction_factor,
        })
        .collect();
    Ok(OptimizeResult {
        best: designs[best].clone(),
        gamma_cm: rates[best].value,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub n_layers: usize,
    pub mean_layer_thickness: f64,
    pub gamma_cm: f64,
    /// Γ_cm + Γ_th [W].
    pub saturation_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminabilityReport {
    pub designs: Vec<DesignRow>,
    pub thermal_power: f64,
    /// (max Γ_cm − min Γ_cm) / mean Γ_cm.
    pub spread: f64,
    pub threshold: f64,
    pub discriminating: bool,
}

const CONSTRAINT_TOL: f64 = 1e-9;

/// Compares Γ_cm across designs that share total mass and mass ratio. The
/// thermal term is the same for every design because it never looks at the
/// geometry.
pub fn discriminability_report(
    designs: &[LayerDesign],
    csl: &CslParams,
    thermal: &ThermalModel,
    quad: &QuadratureSpec,
    threshold: f64,
) -> Result<DiscriminabilityReport, AnalysisError> {
    if designs.len() < 2 {
        return Err(AnalysisError::ConstraintViolation("need at least two designs".into()));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= CONSTRAINT_TOL * a.abs().max(b.abs());
    let first = &designs[0];
    for (i, d) in designs.iter().enumerate().skip(1) {
        if !close(d.total_mass, first.total_mass) {
            return Err(AnalysisError::ConstraintViolation(format!(
                "design {i} has total mass {:e} kg, design 0 has {:e} kg",
                d.total_mass, first.total_mass
            )));
        }
        if !close(d.mass_ratio(), first.mass_ratio()) {
            return Err(AnalysisError::ConstraintViolation(format!(
                "design {i} has mass ratio {}, design 0 has {}",
                d.mass_ratio(),
                first.mass_ratio()
            )));
        }
    }
    let thermal_power = thermal_gain(thermal);
    let rates = designs
        .par_iter()
        .map(|d| gamma_cm(&d.model(), csl, quad).map(|r| r.value))
        .collect::<Result<Vec<_>, _>>()?;
    let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let spread = if mean > 0.0 { (max - min) / mean } else { 0.0 };
    Ok(DiscriminabilityReport {
        designs: designs
            .iter()
            .zip(&rates)
            .map(|(d, &g)| DesignRow {
                n_layers: d.n_layers,
                mean_layer_thickness: d.mean_layer_thickness(),
                gamma_cm: g,
                saturation_power: g + thermal_power,
            })
            .collect(),
        thermal_power,
        spread,
        threshold,
        discriminating: spread > threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBound {
    /// Largest λ [1/s] consistent with the observed power; infinite when the
    /// body is insensitive at this r_C.
    pub lambda_max: f64,
    /// Γ_cm at λ = 1 s⁻¹ [J].
    pub gamma_cm_per_lambda: f64,
    pub unbounded: bool,
}

fn bound_from(power: f64, per_lambda: f64) -> LambdaBound {
    if per_lambda < f64::MIN_POSITIVE {
        LambdaBound {
            lambda_max: f64::INFINITY,
            gamma_cm_per_lambda: per_lambda,
            unbounded: true,
        }
    } else {
        LambdaBound {
            lambda_max: power / per_lambda,
            gamma_cm_per_lambda: per_lambda,
            unbounded: false,
        }
    }
}

/// Upper bound on λ from an observed centre-of-mass heating power [W],
/// using that Γ_cm is linear in λ.
pub fn lambda_bound(observed_power: f64, model: &MassModel, r_c: f64, quad: &QuadratureSpec) -> Result<LambdaBound, AnalysisError> {
    if !(observed_power.is_finite() && observed_power >= 0.0) {
        return Err(AnalysisError::ConstraintViolation(format!(
            "observed power must be finite and >= 0, got {observed_power}"
        )));
    }
    let (per_lambda, _) = cm_per_lambda(model, r_c, quad)?;
    Ok(bound_from(observed_power, per_lambda))
}
