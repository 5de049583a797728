//! Discrete-lattice oracles.
//!
//! A [`Lattice`] is a list of point masses. Its geometry factor is the direct
//! sum `Σ m_ℓ exp(-i k·R_ℓ)`, and its centre-of-mass rate follows exactly
//! from the Gaussian k-integral done analytically pair by pair:
//!
//! ```text
//! I = π^{3/2} Σ_{ℓℓ'} w_ℓ w_ℓ' exp(-σ²/4) (3/2 - σ²/4),   σ = |R_ℓ - R_ℓ'| / r_C
//! ```
//!
//! with `w = m / M`. For bodies with millions of sites along each axis the
//! separable [`SeparableLattice`] factorizes that sum per axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::LatticeError;
use crate::experiment::CslParams;
use crate::geometry::{Axis, FormFactorValue, MassModel, Shape, Wavevector};
use crate::heating::{cm_prefactor, combine_moments, gamma_total, AxisMoments, CmIntegral};
use crate::summation::{ComplexSum, NeumaierSum};

pub const DEFAULT_SITE_CAP: u128 = 100_000_000;

/// Sites per parallel chunk; fixed so sums do not depend on thread count.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    /// Mass [kg].
    pub mass: f64,
    /// Equilibrium position [m].
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub sites: Vec<Site>,
    /// Volume per site [m³].
    pub cell_volume: f64,
    pub n_cells: usize,
}

impl Lattice {
    /// A lattice from explicit sites; `cell_volume` is informational.
    pub fn from_sites(sites: Vec<Site>, cell_volume: f64) -> Self {
        let n_cells = sites.len();
        Self {
            sites,
            cell_volume,
            n_cells,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.sites.iter().map(|s| s.mass).collect::<NeumaierSum>().value()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Site counts of the simple-cubic grid covering the bounding box.
fn grid_counts(extent: [f64; 3], spacing: f64) -> [usize; 3] {
    extent.map(|l| ((l / spacing) * (1.0 - 1e-12)).ceil().max(1.0) as usize)
}

/// Simple-cubic lattice with spacing `d` filling `model`.
///
/// Sites sit at cell centres of a grid centred on the body; a site is kept
/// when the density at its centre is positive, carries `density · d³`, and
/// all masses are finally rescaled so the total equals the model's mass.
pub fn build_lattice(model: &MassModel, spacing: f64) -> Result<Lattice, LatticeError> {
    build_lattice_capped(model, spacing, DEFAULT_SITE_CAP)
}

pub fn build_lattice_capped(model: &MassModel, spacing: f64, cap: u128) -> Result<Lattice, LatticeError> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(LatticeError::InvalidSpacing(spacing));
    }
    let cell_volume = spacing.powi(3);
    if let Shape::PointMass { mass, .. } = model.shape {
        return Ok(Lattice::from_sites(
            vec![Site {
                mass,
                position: model.center(),
            }],
            cell_volume,
        ));
    }
    let counts = grid_counts(model.extent(), spacing);
    let requested = counts.iter().map(|&n| n as u128).product::<u128>();
    if requested > cap {
        return Err(LatticeError::TooManySites { requested, cap });
    }
    let c = model.center();
    let coord = |axis: usize, j: usize| c[axis] + (j as f64 - (counts[axis] as f64 - 1.0) / 2.0) * spacing;
    let mut sites: Vec<Site> = (0..counts[0])
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            for j in 0..counts[1] {
                for k in 0..counts[2] {
                    let position = [coord(0, i), coord(1, j), coord(2, k)];
                    let rho = model.density_at(position);
                    if rho > 0.0 {
                        out.push(Site {
                            mass: rho * cell_volume,
                            position,
                        });
                    }
                }
            }
            out
        })
        .collect();
    let raw = sites.iter().map(|s| s.mass).collect::<NeumaierSum>().value();
    let scale = model.total_mass() / raw;
    for s in &mut sites {
        s.mass *= scale;
    }
    Ok(Lattice::from_sites(sites, cell_volume))
}

fn phase(angle: f64) -> Complex64 {
    let (s, c) = angle.sin_cos();
    Complex64::new(c, -s)
}

/// Direct sum `Σ m_ℓ exp(-i k·R_ℓ)` [kg], compensated and partition
/// independent.
pub fn mu_tilde_discrete(lat: &Lattice, k: Wavevector) -> FormFactorValue {
    let partials: Vec<ComplexSum> = lat
        .sites
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = ComplexSum::new();
            for s in chunk {
                acc.add(phase(k.dot(&s.position)) * s.mass);
            }
            acc
        })
        .collect();
    let mut total = ComplexSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// A linear combination `Σ c_ℓa X_ℓa` of one kind of canonical operator
/// (all displacements or all momenta).
struct LinearForm {
    coeffs: Vec<[Complex64; 3]>,
}

/// `[û_ℓa, p̂_ℓ'b] = iħ δ_ℓℓ' δ_ab`.
fn canonical(l: usize, a: usize, lp: usize, b: usize) -> Complex64 {
    if l == lp && a == b {
        Complex64::new(0.0, HBAR)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// `[Σ c_ℓa û_ℓa, Σ d_ℓ'b p̂_ℓ'b]`, a c-number, by explicit pairwise
/// expansion.
fn commutator_u_p(u: &LinearForm, p: &LinearForm) -> Complex64 {
    let rows: Vec<ComplexSum> = (0..u.coeffs.len())
        .into_par_iter()
        .map(|l| {
            let mut acc = ComplexSum::new();
            for (lp, d) in p.coeffs.iter().enumerate() {
                for a in 0..3 {
                    for b in 0..3 {
                        acc.add(u.coeffs[l][a] * d[b] * canonical(l, a, lp, b));
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = ComplexSum::new();
    for r in &rows {
        total.merge(r);
    }
    total.value()
}

/// `F(k) = [μ̂†, [μ̂, Ĥ]]` for the linearized geometry operator
/// `μ̂ = Σ m_ℓ e^{-ik·R_ℓ}(1 - i k·û_ℓ)` and `Ĥ = Σ p̂²/2m + V(û)`,
/// in units of ħ²·kg/m².
///
/// The potential commutes with every displacement, so only the kinetic part
/// survives the inner commutator: `[û_ℓa, p̂_ℓb²/2m_ℓ] = iħ p̂_ℓa / m_ℓ`.
/// That leaves a momentum form, whose commutator with the displacement part
/// of `μ̂†` is a c-number.
pub fn f_double_commutator(lat: &Lattice, k: Wavevector) -> f64 {
    let n = lat.sites.len();
    // displacement coefficients of μ̂: α_ℓ k_a with α_ℓ = -i m_ℓ e^{-ik·R_ℓ}
    let alpha: Vec<Complex64> = lat
        .sites
        .iter()
        .map(|s| Complex64::new(0.0, -s.mass) * phase(k.dot(&s.position)))
        .collect();
    // [μ̂, Ĥ] = Σ α_ℓ k_a [û_ℓa, p̂_ℓa²/2m_ℓ] = Σ α_ℓ k_a iħ/m_ℓ p̂_ℓa
    let inner = LinearForm {
        coeffs: (0..n)
            .map(|l| {
                let c = alpha[l] * Complex64::new(0.0, HBAR / lat.sites[l].mass);
                k.0.map(|ka| c * ka)
            })
            .collect(),
    };
    // displacement part of μ̂†: conj(α_ℓ) k_a û_ℓa
    let outer = LinearForm {
        coeffs: alpha.iter().map(|a| k.0.map(|ka| a.conj() * ka)).collect(),
    };
    commutator_u_p(&outer, &inner).re
}

/// Γ from the lattice: `(3/4) ħ² λ Σm / (m_N² r_C²)` [W].
pub fn gamma_total_discrete(lat: &Lattice, csl: &CslParams) -> f64 {
    gamma_total(lat.total_mass(), csl)
}

/// Gaussian pair kernels for the 1D moments at separation `s` in units of
/// r_C: `(A, B)` contributions per unit weight product.
#[inline]
fn pair_kernel_1d(s: f64) -> (f64, f64) {
    let g = (-0.25 * s * s).exp();
    (g, g * (0.5 - 0.25 * s * s))
}

/// `I` of an arbitrary lattice by the O(N²) pair sum.
pub fn pair_sum_integral(lat: &Lattice, r_c: f64) -> f64 {
    let m = lat.total_mass();
    let w: Vec<f64> = lat.sites.iter().map(|s| s.mass / m).collect();
    let rows: Vec<f64> = (0..lat.sites.len())
        .into_par_iter()
        .map(|i| {
            let ri = lat.sites[i].position;
            let mut acc = NeumaierSum::new();
            for (j, sj) in lat.sites.iter().enumerate() {
                let d = [
                    (ri[0] - sj.position[0]) / r_c,
                    (ri[1] - sj.position[1]) / r_c,
                    (ri[2] - sj.position[2]) / r_c,
                ];
                let s2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                acc.add(w[i] * w[j] * (-0.25 * s2).exp() * (1.5 - 0.25 * s2));
            }
            acc.value()
        })
        .collect();
    PI.powf(1.5) * rows.into_iter().collect::<NeumaierSum>().value()
}

/// Γ_cm [W] of an arbitrary lattice by the pair sum.
pub fn gamma_cm_pair_sum(lat: &Lattice, csl: &CslParams) -> f64 {
    cm_prefactor(lat.total_mass(), csl) * pair_sum_integral(lat, csl.r_c)
}

/// Sites along one axis of a product lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisSites {
    /// `n` equal weights at spacing `d`.
    Uniform { n: usize, spacing: f64 },
    /// Arbitrary sorted positions and normalized weights.
    General { positions: Vec<f64>, weights: Vec<f64> },
}

impl AxisSites {
    pub fn len(&self) -> usize {
        match self {
            AxisSites::Uniform { n, .. } => *n,
            AxisSites::General { positions, .. } => positions.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(A, B)` for this axis at correlation length `r_c`.
    pub fn moments(&self, r_c: f64) -> (f64, f64) {
        let sqrt_pi = PI.sqrt();
        let cutoff = 40.0;
        match self {
            AxisSites::Uniform { n, spacing } => {
                let n = *n;
                let step = spacing / r_c;
                let max_lag = ((cutoff / step).ceil() as usize).min(n - 1);
                let mut a = NeumaierSum::new();
                let mut b = NeumaierSum::new();
                let nn = (n as f64) * (n as f64);
                for lag in (0..=max_lag).rev() {
                    let mult = if lag == 0 { 1.0 } else { 2.0 };
                    let count = (n - lag) as f64 * mult / nn;
                    let (ka, kb) = pair_kernel_1d(lag as f64 * step);
                    a.add(count * ka);
                    b.add(count * kb);
                }
                (sqrt_pi * a.value(), sqrt_pi * b.value())
            }
            AxisSites::General { positions, weights } => {
                let window = cutoff * r_c;
                let rows: Vec<(f64, f64)> = (0..positions.len())
                    .into_par_iter()
                    .map(|i| {
                        let mut a = NeumaierSum::new();
                        let mut b = NeumaierSum::new();
                        let lo = positions.partition_point(|&x| x < positions[i] - window);
                        let hi = positions.partition_point(|&x| x <= positions[i] + window);
                        for j in lo..hi {
                            let (ka, kb) = pair_kernel_1d((positions[i] - positions[j]) / r_c);
                            a.add(weights[i] * weights[j] * ka);
                            b.add(weights[i] * weights[j] * kb);
                        }
                        (a.value(), b.value())
                    })
                    .collect();
                let a = rows.iter().map(|r| r.0).collect::<NeumaierSum>().value();
                let b = rows.iter().map(|r| r.1).collect::<NeumaierSum>().value();
                (sqrt_pi * a, sqrt_pi * b)
            }
        }
    }
}

/// A product lattice `x-sites × y-sites × z-sites` for a cuboid, a layered
/// stack or a point mass, with weights that multiply to `m_ℓ / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableLattice {
    pub axes: [AxisSites; 3],
}

/// Cells per segment of length `len` at maximal spacing `max_spacing`.
fn cells(len: f64, max_spacing: f64) -> usize {
    ((len / max_spacing) * (1.0 - 1e-12)).ceil().max(4.0) as usize
}

impl SeparableLattice {
    /// Product lattice for `model` with no spacing above `max_spacing`;
    /// `refine` doubles every cell count that many times.
    pub fn new(model: &MassModel, max_spacing: f64, refine: u32) -> Result<Self, LatticeError> {
        if !(max_spacing.is_finite() && max_spacing > 0.0) {
            return Err(LatticeError::InvalidSpacing(max_spacing));
        }
        let factor = 1usize << refine;
        let uniform = |len: f64| {
            let n = cells(len, max_spacing) * factor;
            AxisSites::Uniform {
                n,
                spacing: len / n as f64,
            }
        };
        let single = || AxisSites::Uniform { n: 1, spacing: 1.0 };
        let axes = match &model.shape {
            Shape::PointMass { .. } => [single(), single(), single()],
            Shape::Cuboid { lx, ly, lz, .. } => [uniform(*lx), uniform(*ly), uniform(*lz)],
            Shape::LayeredStack { lx, ly, layers } => {
                let total: f64 = layers.iter().map(|l| l.thickness).sum();
                let areal: f64 = layers.iter().map(|l| l.material.density * l.thickness).sum();
                let mut positions = Vec::new();
                let mut weights = Vec::new();
                let mut z0 = -total / 2.0;
                for l in layers {
                    let n = cells(l.thickness, max_spacing) * factor;
                    let d = l.thickness / n as f64;
                    let w = l.material.density * l.thickness / areal / n as f64;
                    for j in 0..n {
                        positions.push(z0 + (j as f64 + 0.5) * d);
                        weights.push(w);
                    }
                    z0 += l.thickness;
                }
                [
                    uniform(*lx),
                    uniform(*ly),
                    AxisSites::General { positions, weights },
                ]
            }
            _ => return Err(crate::error::GeometryError::NotSeparable(model.kind_name()).into()),
        };
        Ok(Self { axes })
    }

    pub fn site_count(&self) -> u128 {
        self.axes.iter().map(|a| a.len() as u128).product()
    }

    pub fn integral(&self, r_c: f64) -> f64 {
        let moments = Axis::ALL.map(|axis| {
            let (a, b) = self.axes[axis.index()].moments(r_c);
            AxisMoments {
                a,
                b,
                a_rel_error: 0.0,
                b_rel_error: 0.0,
            }
        });
        combine_moments(&moments).value
    }
}

/// Lattice Γ_cm with the discretization error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeRate {
    pub value: f64,
    /// Estimated absolute error of `value`.
    pub error: f64,
    pub reduction_factor: f64,
}

/// `I` from product lattices at spacing `d` and `d/2`, Richardson
/// extrapolated to zero spacing. The midpoint lattice error is O(d²).
pub fn lattice_cm_integral(model: &MassModel, r_c: f64, max_spacing: f64) -> Result<CmIntegral, LatticeError> {
    let coarse = SeparableLattice::new(model, max_spacing, 0)?.integral(r_c);
    let fine = SeparableLattice::new(model, max_spacing, 1)?.integral(r_c);
    let value = (4.0 * fine - coarse) / 3.0;
    Ok(CmIntegral {
        value,
        rel_error: ((value - fine) / value).abs(),
    })
}

/// Γ_cm [W] from the discrete-lattice Gaussian-weighted pair sum, at lattice
/// spacing at most `r_c / 10` unless `max_spacing` is given.
pub fn gamma_cm_lattice(model: &MassModel, csl: &CslParams, max_spacing: Option<f64>) -> Result<LatticeRate, LatticeError> {
    let spacing = max_spacing.unwrap_or(csl.r_c / 10.0);
    let i = lattice_cm_integral(model, csl.r_c, spacing)?;
    let pref = cm_prefactor(model.total_mass(), csl);
    Ok(LatticeRate {
        value: pref * i.value,
        error: pref * i.value * i.rel_error,
        reduction_factor: i.reduction_factor(),
    })
}

/// Outcome of one check in [`lattice_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub name: String,
    pub passed: bool,
    /// Worst relative deviation seen (or the fitted slope for convergence).
    pub measure: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSuiteReport {
    pub checks: Vec<SuiteCheck>,
    /// `|mu_discrete - mu| / M` at spacings `L/10, L/20, L/40, L/80`.
    pub convergence_errors: Vec<f64>,
    pub convergence_slopes: Vec<f64>,
    pub all_passed: bool,
}

/// A lattice of `n` sites with random masses in `[1e-27, 1e-25]` kg and
/// random positions in a 2 µm box.
pub fn random_lattice(n: usize, rng: &mut impl rand::Rng) -> Lattice {
    let sites = (0..n)
        .map(|_| Site {
            mass: 1e-27 * 10f64.powf(2.0 * rng.random::<f64>()),
            position: std::array::from_fn(|_| (rng.random::<f64>() - 0.5) * 2e-6),
        })
        .collect();
    Lattice::from_sites(sites, 1e-30)
}

fn random_wavevector(rng: &mut impl rand::Rng) -> Wavevector {
    Wavevector(std::array::from_fn(|_| (rng.random::<f64>() - 0.5) * 2e8))
}

/// `|mu_discrete - mu| / M` for a cube of edge `2 r_c` at spacing
/// `2 r_c / cells`, at `|k| = 1 / r_c` along a body diagonal-ish direction.
pub fn cube_discretization_error(r_c: f64, cells: usize) -> f64 {
    let edge = 2.0 * r_c;
    let model = MassModel::cube(edge, crate::geometry::Material::new("Si", 2329.0));
    let lat = build_lattice(&model, edge / cells as f64).expect("small lattice");
    let dir: [f64; 3] = [1.0, 2.0, 3.0];
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let k = Wavevector(dir.map(|d| d / (norm * r_c)));
    (mu_tilde_discrete(&lat, k) - model.mu_tilde(k)).norm() / model.total_mass()
}

/// The lattice oracle suite: the double-commutator identity on random
/// lattices, its independence of site positions, the mass-only total rate,
/// the discrete geometry-factor bound, and O(d²) convergence of the
/// discrete geometry factor to the continuum one.
pub fn lattice_suite(random_lattices: usize, sites_per_lattice: usize, seed: u64) -> LatticeSuiteReport {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut worst_identity: f64 = 0.0;
    let mut worst_rearranged: f64 = 0.0;
    let mut worst_total: f64 = 0.0;
    let mut worst_bound: f64 = 0.0;
    let csl = CslParams::new(1e-16, 1e-7);
    for _ in 0..random_lattices {
        let lat = random_lattice(sites_per_lattice, &mut rng);
        let k = random_wavevector(&mut rng);
        let m = lat.total_mass();
        let want = -HBAR * HBAR * m * k.norm_sq();
        let f = f_double_commutator(&lat, k);
        worst_identity = worst_identity.max((f / want - 1.0).abs());
        for _ in 0..10 {
            let mut positions: Vec<[f64; 3]> = lat.sites.iter().map(|s| s.position).collect();
            positions.shuffle(&mut rng);
            let moved = Lattice::from_sites(
                lat.sites
                    .iter()
                    .zip(positions)
                    .map(|(s, position)| Site {
                        mass: s.mass,
                        position,
                    })
                    .collect(),
                lat.cell_volume,
            );
            worst_rearranged = worst_rearranged.max((f_double_commutator(&moved, k) / f - 1.0).abs());
        }
        let total = gamma_total_discrete(&lat, &csl);
        worst_total = worst_total.max((total / gamma_total(m, &csl) - 1.0).abs());
        worst_bound = worst_bound.max(mu_tilde_discrete(&lat, k).norm() / m - 1.0);
    }

    let r_c = 1e-7;
    let cells = [10, 20, 40, 80];
    let errors: Vec<f64> = cells.iter().map(|&c| cube_discretization_error(r_c, c)).collect();
    let slopes: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let worst_slope = slopes
        .iter()
        .copied()
        .max_by(|a, b| (a - 2.0).abs().total_cmp(&(b - 2.0).abs()))
        .unwrap_or(f64::NAN);
    let at_fifty = cube_discretization_error(r_c, 50);

    let check = |name: &str, measure: f64, tolerance: f64, passed: bool| SuiteCheck {
        name: name.into(),
        passed,
        measure,
        tolerance,
    };
    let checks = vec![
        check("double_commutator_identity", worst_identity, 1e-14, worst_identity <= 1e-14),
        check("position_independence", worst_rearranged, 1e-14, worst_rearranged <= 1e-14),
        check("total_rate_mass_only", worst_total, 1e-15, worst_total <= 1e-15),
        check("discrete_bound", worst_bound, 1e-12, worst_bound <= 1e-12),
        check("cube_spacing_l_over_50", at_fifty, 1e-3, at_fifty <= 1e-3),
        check(
            "convergence_order",
            worst_slope,
            0.3,
            slopes.iter().all(|s| (s - 2.0).abs() <= 0.3),
        ),
    ];
    let all_passed = checks.iter().all(|c| c.passed);
    LatticeSuiteReport {
        checks,
        convergence_errors: errors,
        convergence_slopes: slopes,
        all_passed,
    }
}
