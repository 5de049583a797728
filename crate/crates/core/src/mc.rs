//! Monte-Carlo estimate of the centre-of-mass rate.
//!
//! Every draw comes from ChaCha20 seeded with the spec seed, one stream per
//! replicate and integral, so results do not depend on the thread count.
//!
//! Separable bodies (cuboid, stack, point mass) are estimated axis by axis:
//! each of the six 1D moments is sampled with one stratified draw per
//! probability stratum. `B` is sampled from the Gaussian weight itself. `A`
//! is sampled from the Gaussian when the axis is short compared to r_C and
//! from a Cauchy law matched to the width of the form factor when it is long,
//! because the Gaussian puts almost no samples in the narrow central lobe of
//! a long axis. Spheres and cylinders use plain 3D Gaussian sampling.
//!
//! The standard error comes from the spread of independent replicates.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv, erfc, erfc_inv};

use crate::experiment::{CslParams, QuadratureSpec};
use crate::geometry::{Axis, MassModel, Shape, Wavevector};
use crate::heating::{cm_prefactor, combine_moments, AxisMoments, GAUSSIAN_MOMENT};
use crate::summation::NeumaierSum;

pub const REPLICATES: usize = 16;

/// Γ_cm [W] with the standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Estimated reduction factor Γ_cm / Γ.
    pub reduction_factor: f64,
}

impl McEstimate {
    pub fn rel_std_error(&self) -> f64 {
        self.std_error / self.value.abs()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean and standard error of the mean of replicate estimates.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<NeumaierSum>().value() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<NeumaierSum>()
        .value();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// `|U|` for `U ~ N(0, 1/2)` at cumulative probability `p` of `|U|`.
/// statrs' inverses are good to ~1e-11; one Newton step on the forward
/// function brings the result to rounding level.
fn half_gaussian_quantile(p: f64) -> f64 {
    let slope = |u: f64| 2.0 / PI.sqrt() * (-u * u).exp();
    if p < 0.5 {
        let u = erf_inv(p);
        u - (erf(u) - p) / slope(u)
    } else {
        let q = 1.0 - p;
        let u = erfc_inv(q);
        if !u.is_finite() {
            return u;
        }
        u + (erfc(u) - q) / slope(u)
    }
}

/// Stratified estimate of `∫_{-∞}^{∞} e^{-u²} u^{2m} g(u) du` for even `g`,
/// with `n` strata and one uniform draw per stratum.
fn stratified_moment<G: Fn(f64) -> f64>(g: &G, moment: i32, cauchy_scale: Option<f64>, n: usize, rng: &mut ChaCha20Rng) -> f64 {
    let mut acc = NeumaierSum::new();
    for j in 0..n {
        let p = (j as f64 + rng.random::<f64>()) / n as f64;
        let value = match cauchy_scale {
            None => {
                let u = half_gaussian_quantile(p);
                PI.sqrt() * u.powi(2 * moment) * g(u)
            }
            Some(s) => {
                // half-Cauchy with density 2 / (π s (1 + (u/s)²)) on u > 0
                let u = s * (0.5 * PI * p).tan();
                if !u.is_finite() || u > 40.0 {
                    0.0
                } else {
                    let q = 2.0 / (PI * s * (1.0 + (u / s) * (u / s)));
                    2.0 * (-u * u).exp() * u.powi(2 * moment) * g(u) / q
                }
            }
        };
        acc.add(value);
    }
    acc.value() / n as f64
}

/// Scale of the Cauchy proposal for the `A` moment of an axis of length
/// `len`, or `None` to sample from the Gaussian.
fn a_proposal(len: f64, r_c: f64) -> Option<f64> {
    let half = len / (2.0 * r_c);
    (half > 1.0).then(|| 1.0 / half)
}

fn separable(model: &MassModel, r_c: f64, samples: usize, seed: u64) -> (f64, f64) {
    let per = (samples / REPLICATES).max(1);
    let ext = model.extent();
    let point = matches!(model.shape, Shape::PointMass { .. });
    let estimates: Vec<f64> = (0..REPLICATES)
        .into_par_iter()
        .map(|r| {
            let moments = Axis::ALL.map(|axis| {
                let i = axis.index();
                let f2 = |u: f64| {
                    if point {
                        1.0
                    } else {
                        model
                            .separable_factor(axis, u / r_c)
                            .expect("separable shape")
                            .norm_sqr()
                    }
                };
                let base = (r * 6 + i * 2) as u64;
                let a = stratified_moment(&f2, 0, a_proposal(ext[i], r_c), per, &mut rng_for(seed, base));
                let b = stratified_moment(&f2, 1, None, per, &mut rng_for(seed, base + 1));
                AxisMoments {
                    a,
                    b,
                    a_rel_error: 0.0,
                    b_rel_error: 0.0,
                }
            });
            combine_moments(&moments).value
        })
        .collect();
    mean_and_se(&estimates)
}

/// Plain estimate `I = π^{3/2} E[u² |f(u/r_C)|²]` with `u ~ N(0, 1/2)³`.
pub fn plain_integral(model: &MassModel, r_c: f64, samples: usize, seed: u64) -> (f64, f64) {
    let per = (samples / REPLICATES).max(1);
    let norm = PI.powf(1.5);
    let estimates: Vec<f64> = (0..REPLICATES)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, r as u64);
            let mut acc = NeumaierSum::new();
            for _ in 0..per {
                let u: [f64; 3] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2);
                let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
                let k = Wavevector(u.map(|x| x / r_c));
                acc.add(u2 * model.normalized_form_factor(k).norm_sqr());
            }
            norm * acc.value() / per as f64
        })
        .collect();
    mean_and_se(&estimates)
}

fn to_estimate(model: &MassModel, csl: &CslParams, (i, se): (f64, f64)) -> McEstimate {
    let pref = cm_prefactor(model.total_mass(), csl);
    McEstimate {
        value: pref * i,
        std_error: pref * se,
        reduction_factor: i / GAUSSIAN_MOMENT,
    }
}

/// Monte-Carlo Γ_cm [W] with standard error; deterministic for a fixed seed.
pub fn gamma_cm_mc(model: &MassModel, csl: &CslParams, quad: &QuadratureSpec) -> McEstimate {
    let raw = match model.shape {
        Shape::Sphere { .. } | Shape::Cylinder { .. } => plain_integral(model, csl.r_c, quad.mc_samples, quad.rng_seed),
        _ => separable(model, csl.r_c, quad.mc_samples, quad.rng_seed),
    };
    to_estimate(model, csl, raw)
}

/// Plain 3D Gaussian sampling for any body.
pub fn gamma_cm_mc_plain(model: &MassModel, csl: &CslParams, quad: &QuadratureSpec) -> McEstimate {
    to_estimate(model, csl, plain_integral(model, csl.r_c, quad.mc_samples, quad.rng_seed))
}
