//! Fixed physical constants (CODATA 2018, SI units).

use serde::Serialize;

/// Identifier written into every output payload so results can be traced to
/// the constant set that produced them.
pub const CONSTANTS_VERSION: &str = "CODATA-2018/proton-reference";

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Reference nucleon mass [kg]. The proton mass is used as the nucleon
/// reference.
pub const NUCLEON_MASS: f64 = 1.672_621_923_69e-27;
/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// The constant set as a value, for embedding in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub m_nucleon: f64,
    pub k_boltzmann: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        m_nucleon: NUCLEON_MASS,
        k_boltzmann: BOLTZMANN,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}
