//! Physical constants (CODATA 2018) and shared numeric tolerances.
//!
//! Every module converts through these exact values so that derived
//! quantities (hopping energies, precession angles, conductance) agree
//! bit-for-bit across the crate.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054571817e-34;

/// Free electron mass, kg.
pub const M0: f64 = 9.1093837015e-31;

/// One electronvolt, J. Exact since the 2019 SI redefinition.
pub const EV: f64 = 1.602176634e-19;

/// Planck constant h = 2π·ħ, J·s.
pub const H_PLANCK: f64 = 2.0 * std::f64::consts::PI * HBAR;

/// e²/h, the conductance quantum per spin, in siemens.
pub const G0: f64 = EV * EV / H_PLANCK;

/// Wavevector of a free carrier: γ = sqrt(2 m* E_kin) / ħ, in 1/m.
///
/// `m_eff` is the effective mass in units of the free electron mass and
/// `e_kin_ev` the kinetic energy in eV. Negative kinetic energy is the
/// caller's error; this returns NaN there rather than guessing a branch.
pub fn wavevector(e_kin_ev: f64, m_eff: f64) -> f64 {
    (2.0 * m_eff * M0 * e_kin_ev * EV).sqrt() / HBAR
}

/// Nearest-neighbour hopping energy t = ħ²/(2 m* a²) in eV for lattice
/// constant `a_m` in metres.
pub fn hopping_ev(a_m: f64, m_eff: f64) -> f64 {
    HBAR * HBAR / (2.0 * m_eff * M0 * a_m * a_m) / EV
}

/// Numeric tolerances used by release-path checks (not test assertions).
pub mod tol {
    /// A scattering matrix must satisfy ‖S·S† − I‖∞ below this bound
    /// before we trust derived quantities such as coincidence rates.
    pub const UNITARITY: f64 = 1e-10;

    /// Hamiltonian Hermiticity bound, absolute, in eV.
    pub const HERMITICITY: f64 = 1e-14;

    /// Probability vectors must sum to one within this bound.
    pub const PROB_SUM: f64 = 1e-12;

    /// Surface Green's function decimation stops when the coupling
    /// residual falls below this value (in units of t).
    pub const DECIMATION_RESIDUAL: f64 = 1e-12;

    /// Decimation iteration cap; exceeded means no convergence.
    pub const DECIMATION_MAX_ITER: usize = 10_000;
}
