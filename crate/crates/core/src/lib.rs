//! Heating of solid test masses by CSL collapse noise.
//!
//! The total energy gain rate of a body depends only on its mass. The part
//! that drives the centre-of-mass motion depends on the body's shape through
//! the Fourier transform of its mass density, and the remainder heats the
//! internal degrees of freedom. This crate evaluates all three rates for
//! simple continuum bodies, checks them against discrete-lattice and
//! Monte-Carlo oracles, and uses the shape dependence to design layered test
//! masses.
//!
//! ```
//! use csl_heat::prelude::*;
//!
//! let csl = CslParams::new(1e-16, 1e-7);
//! let cube = MassModel::cube(1e-6, Material::new("Si", 2329.0));
//! let report = heating_report(&cube, &csl, &QuadratureSpec::default()).unwrap();
//! assert!(report.reduction_factor < 0.1);
//! ```

pub mod analysis;
pub mod constants;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod heating;
pub mod lattice;
pub mod mc;
pub mod quadrature;
pub mod special;
pub mod summation;

pub mod prelude {
    pub use crate::analysis::{
        discriminability_report, lambda_bound, optimize_layers, scan_rc, thermal_gain, LayerDesign,
        LayerFamily, ScanTable, ThermalModel,
    };
    pub use crate::constants::{PhysicalConstants, CONSTANTS_VERSION};
    pub use crate::error::{AnalysisError, HeatingError, LatticeError, SpecError};
    pub use crate::experiment::{load_spec, validate_spec, CslParams, ExperimentSpec, QuadratureSpec};
    pub use crate::geometry::{Axis, Layer, MassModel, Material, Shape, Wavevector};
    pub use crate::heating::{gamma_cm, gamma_internal, gamma_total, heating_report, HeatingReport};
    pub use crate::lattice::{build_lattice, f_double_commutator, mu_tilde_discrete, Lattice};
    pub use crate::mc::gamma_cm_mc;
}
