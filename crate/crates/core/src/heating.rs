//! Total, centre-of-mass and internal heating rates.
//!
//! With `u = r_C k` the centre-of-mass rate is
//!
//! ```text
//! Γ_cm = λ ħ² M / (2 π^{3/2} m_N² r_C²) · I,   I = ∫ d³u exp(-u²) u² |f(u / r_C)|²
//! ```
//!
//! where `f = mu / M` is the normalized form factor. A point mass has
//! `I = (3/2) π^{3/2}` and recovers the total rate. Cuboids and stacks
//! factorize into 1D integrals; spheres reduce to a radial integral and
//! cylinders to a product of transverse and axial integrals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, NUCLEON_MASS};
use crate::error::{HeatingError, QuadratureError};
use crate::experiment::{CslParams, QuadratureSpec};
use crate::geometry::{Axis, MassModel, Shape};
use crate::quadrature::{integrate, panels_for_oscillation, AdaptiveOptions, Integral};
use crate::special::{jinc, sinc, sphere_kernel};

/// `∫ d³u exp(-u²) u² = (3/2) π^{3/2}`, the value of `I` for a point mass.
pub const GAUSSIAN_MOMENT: f64 = 1.5 * 5.568_327_996_831_708;

const MIN_PANELS: usize = 16;

/// Total energy gain rate Γ = (3/4) ħ² λ M / (m_N² r_C²) [W].
pub fn gamma_total(mass: f64, csl: &CslParams) -> f64 {
    0.75 * HBAR * HBAR * csl.lambda_rate * mass / (NUCLEON_MASS * NUCLEON_MASS * csl.r_c * csl.r_c)
}

/// Factor turning the dimensionless integral `I` into Γ_cm [W].
pub fn cm_prefactor(mass: f64, csl: &CslParams) -> f64 {
    csl.lambda_rate * HBAR * HBAR * mass / (2.0 * PI.powf(1.5) * NUCLEON_MASS * NUCLEON_MASS * csl.r_c * csl.r_c)
}

/// The dimensionless integral `I` with its relative error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmIntegral {
    pub value: f64,
    pub rel_error: f64,
}

impl CmIntegral {
    /// Γ_cm / Γ, a function of the body's shape in units of r_C only.
    pub fn reduction_factor(&self) -> f64 {
        self.value / GAUSSIAN_MOMENT
    }
}

/// Γ_cm [W] with its relative error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmRate {
    pub value: f64,
    pub rel_error: f64,
    pub reduction_factor: f64,
}

/// Runs the 1D integrals, remembering whether any of them gave up.
struct Integrator {
    rel_tol: f64,
    u_max: f64,
    failed: bool,
}

impl Integrator {
    fn new(quad: &QuadratureSpec, pieces: usize) -> Self {
        Self {
            rel_tol: quad.rel_tol / pieces as f64,
            u_max: quad.u_max,
            failed: false,
        }
    }

    /// `∫_0^{u_max} g(u) du` where `g` oscillates with angular frequency at
    /// most `frequency` in u.
    fn run<F: Fn(f64) -> f64 + Sync>(&mut self, g: F, frequency: f64) -> Integral {
        let opts = AdaptiveOptions {
            rel_tol: self.rel_tol,
            initial_panels: panels_for_oscillation(self.u_max, frequency, MIN_PANELS),
            ..Default::default()
        };
        match integrate(g, 0.0, self.u_max, &opts) {
            Ok(r) => r,
            Err(QuadratureError::NotConverged { value, error }) => {
                self.failed = true;
                Integral {
                    value,
                    abs_error: error,
                    panels: 0,
                }
            }
        }
    }
}

fn rel(i: &Integral) -> f64 {
    if i.value == 0.0 {
        0.0
    } else {
        i.abs_error / i.value.abs()
    }
}

/// Per-axis moments `A = ∫ e^{-u²}|f|²` and `B = ∫ e^{-u²} u² |f|²` over
/// `[-u_max, u_max]`, with relative errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMoments {
    pub a: f64,
    pub b: f64,
    pub a_rel_error: f64,
    pub b_rel_error: f64,
}

/// `Σ_i B_i Π_{j≠i} A_j` and its first-order relative error.
pub fn combine_moments(m: &[AxisMoments; 3]) -> CmIntegral {
    let mut value = 0.0;
    let mut err = 0.0;
    for i in 0..3 {
        let mut term = m[i].b;
        let mut term_rel = m[i].b_rel_error;
        for (j, mj) in m.iter().enumerate() {
            if j != i {
                term *= mj.a;
                term_rel += mj.a_rel_error;
            }
        }
        value += term;
        err += term.abs() * term_rel;
    }
    CmIntegral {
        value,
        rel_error: if value == 0.0 { 0.0 } else { err / value },
    }
}

/// The integral `I` for `model` at correlation length `r_c`.
pub fn cm_integral(model: &MassModel, r_c: f64, quad: &QuadratureSpec) -> Result<CmIntegral, HeatingError> {
    let (result, failed) = match &model.shape {
        Shape::PointMass { .. } => {
            let mut q = Integrator::new(quad, 1);
            let r = q.run(|u| u.powi(4) * (-u * u).exp(), 0.0);
            (
                CmIntegral {
                    value: 4.0 * PI * r.value,
                    rel_error: rel(&r),
                },
                q.failed,
            )
        }
        Shape::Cuboid { .. } | Shape::LayeredStack { .. } => {
            let mut q = Integrator::new(quad, 6);
            let ext = model.extent();
            let moments = Axis::ALL.map(|axis| {
                let freq = ext[axis.index()] / r_c;
                let f2 = |u: f64| {
                    model
                        .separable_factor(axis, u / r_c)
                        .expect("separable shape")
                        .norm_sqr()
                };
                let a = q.run(|u| 2.0 * (-u * u).exp() * f2(u), freq);
                let b = q.run(|u| 2.0 * u * u * (-u * u).exp() * f2(u), freq);
                AxisMoments {
                    a: a.value,
                    b: b.value,
                    a_rel_error: rel(&a),
                    b_rel_error: rel(&b),
                }
            });
            (combine_moments(&moments), q.failed)
        }
        Shape::Sphere { radius, .. } => {
            let mut q = Integrator::new(quad, 1);
            let s = radius / r_c;
            let r = q.run(
                |u| {
                    let k = sphere_kernel(u * s);
                    u.powi(4) * (-u * u).exp() * k * k
                },
                2.0 * s,
            );
            (
                CmIntegral {
                    value: 4.0 * PI * r.value,
                    rel_error: rel(&r),
                },
                q.failed,
            )
        }
        Shape::Cylinder { radius, height, .. } => {
            let mut q = Integrator::new(quad, 4);
            let s = radius / r_c;
            let h = height / (2.0 * r_c);
            let g2 = |u: f64| {
                let g = jinc(u * s);
                g * g
            };
            let z2 = |u: f64| {
                let z = sinc(u * h);
                z * z
            };
            let p3 = q.run(|u| u.powi(3) * (-u * u).exp() * g2(u), 2.0 * s);
            let p1 = q.run(|u| u * (-u * u).exp() * g2(u), 2.0 * s);
            let z0 = q.run(|u| 2.0 * (-u * u).exp() * z2(u), 2.0 * h);
            let zz = q.run(|u| 2.0 * u * u * (-u * u).exp() * z2(u), 2.0 * h);
            let t1 = 2.0 * PI * p3.value * z0.value;
            let t2 = 2.0 * PI * p1.value * zz.value;
            let value = t1 + t2;
            let err = t1 * (rel(&p3) + rel(&z0)) + t2 * (rel(&p1) + rel(&zz));
            (
                CmIntegral {
                    value,
                    rel_error: if value == 0.0 { 0.0 } else { err / value },
                },
                q.failed,
            )
        }
    };
    if failed {
        return Err(HeatingError::QuadratureNotConverged {
            partial_value: result.value,
            relative_error: result.rel_error,
        });
    }
    Ok(result)
}

/// Centre-of-mass heating rate Γ_cm [W].
pub fn gamma_cm(model: &MassModel, csl: &CslParams, quad: &QuadratureSpec) -> Result<CmRate, HeatingError> {
    let pref = cm_prefactor(model.total_mass(), csl);
    match cm_integral(model, csl.r_c, quad) {
        Ok(i) => Ok(CmRate {
            value: pref * i.value,
            rel_error: i.rel_error,
            reduction_factor: i.reduction_factor(),
        }),
        Err(HeatingError::QuadratureNotConverged {
            partial_value,
            relative_error,
        }) => Err(HeatingError::QuadratureNotConverged {
            partial_value: pref * partial_value,
            relative_error,
        }),
        Err(e) => Err(e),
    }
}

/// Internal heating rate Γ − Γ_cm [W].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalRate {
    pub value: f64,
    /// Set when a slightly negative difference was replaced by zero.
    pub clamped: bool,
}

/// Γ − Γ_cm from precomputed rates. A negative difference within
/// `rel_tol · Γ` is clamped to zero and flagged; anything more negative is an
/// error.
pub fn internal_from_parts(total: f64, cm: f64, rel_tol: f64) -> Result<InternalRate, HeatingError> {
    let diff = total - cm;
    if diff >= 0.0 {
        Ok(InternalRate {
            value: diff,
            clamped: false,
        })
    } else if diff >= -rel_tol * total {
        Ok(InternalRate {
            value: 0.0,
            clamped: true,
        })
    } else {
        Err(HeatingError::NegativeInternalRate { value: diff })
    }
}

pub fn gamma_internal(model: &MassModel, csl: &CslParams, quad: &QuadratureSpec) -> Result<InternalRate, HeatingError> {
    let total = gamma_total(model.total_mass(), csl);
    let cm = gamma_cm(model, csl, quad)?;
    internal_from_parts(total, cm.value, quad.rel_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingReport {
    pub gamma_total: f64,
    pub gamma_cm: f64,
    pub gamma_int: f64,
    pub reduction_factor: f64,
    pub quadrature_estimate_error: f64,
    pub internal_clamped: bool,
}

pub fn heating_report(model: &MassModel, csl: &CslParams, quad: &QuadratureSpec) -> Result<HeatingReport, HeatingError> {
    let total = gamma_total(model.total_mass(), csl);
    let cm = gamma_cm(model, csl, quad)?;
    let internal = internal_from_parts(total, cm.value, quad.rel_tol)?;
    Ok(HeatingReport {
        gamma_total: total,
        gamma_cm: cm.value,
        gamma_int: internal.value,
        reduction_factor: cm.reduction_factor,
        quadrature_estimate_error: cm.rel_error,
        internal_clamped: internal.clamped,
    })
}
