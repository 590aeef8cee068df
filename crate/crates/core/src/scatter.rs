//! Analytic electron-wave scattering: interfaces, barrier slabs, and the
//! two-port interferometer built from a pair of those slabs.
//!
//! An electron at energy E in a region of potential V behaves like a wave
//! with propagation constant γ = sqrt(2 m* (E − V)) / ħ. Interfaces between
//! regions then follow the transmission-line analogy with wave admittance
//! Y = 1/γ, and a finite slab follows from summing the infinite internal
//! reflection series. All matrices here are current-normalised, so a
//! propagating configuration always yields a unitary 2×2 scattering matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{self, tol};
use crate::Spin;

type Cx = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatterError {
    /// E ≤ V somewhere a propagating wave is required.
    #[error("medium with V = {v_ev} eV is evanescent at E = {e_ev} eV")]
    EvanescentMedium { v_ev: f64, e_ev: f64 },
    /// Snell refraction has no real solution for this incidence angle.
    #[error("total internal reflection at incidence {incidence_rad} rad")]
    TotalInternalReflection { incidence_rad: f64 },
    /// Matrix failed the unitarity gate; derived probabilities are unsafe.
    #[error("scattering matrix is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },
}

/// A uniform region: potential in eV plus effective mass in units of m0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub v_ev: f64,
    pub m_eff: f64,
}

impl Medium {
    pub fn new(v_ev: f64, m_eff: f64) -> Self {
        Medium { v_ev, m_eff }
    }

    /// Propagation constant γ in 1/m at total energy `e_ev`.
    pub fn gamma(&self, e_ev: f64) -> Result<f64, ScatterError> {
        if e_ev <= self.v_ev {
            return Err(ScatterError::EvanescentMedium {
                v_ev: self.v_ev,
                e_ev,
            });
        }
        Ok(constants::wavevector(e_ev - self.v_ev, self.m_eff))
    }
}

/// Quantum analogue of a refractive index: γ_medium / γ_reference,
/// i.e. sqrt of the mass ratio times the kinetic-energy ratio.
pub fn effective_index(medium: &Medium, reference: &Medium, e_ev: f64) -> Result<f64, ScatterError> {
    Ok(medium.gamma(e_ev)? / reference.gamma(e_ev)?)
}

/// Wave admittance Y = 1/γ in metres.
pub fn admittance(medium: &Medium, e_ev: f64) -> Result<f64, ScatterError> {
    Ok(1.0 / medium.gamma(e_ev)?)
}

/// Refraction angle in medium 2 for incidence `theta1` in medium 1;
/// γ1·sin θ1 is conserved across the interface.
pub fn snell_angle(
    m1: &Medium,
    m2: &Medium,
    e_ev: f64,
    theta1_rad: f64,
) -> Result<f64, ScatterError> {
    let s2 = m1.gamma(e_ev)? * theta1_rad.sin() / m2.gamma(e_ev)?;
    if s2.abs() > 1.0 {
        return Err(ScatterError::TotalInternalReflection {
            incidence_rad: theta1_rad,
        });
    }
    Ok(s2.asin())
}

/// Two-port scattering matrix laid out as [[t11, r12], [r21, t22]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterMatrix2 {
    pub t11: Cx,
    pub r12: Cx,
    pub r21: Cx,
    pub t22: Cx,
}

impl ScatterMatrix2 {
    pub fn as_rows(&self) -> [[Cx; 2]; 2] {
        [[self.t11, self.r12], [self.r21, self.t22]]
    }

    /// max |S·S† − I| entry.
    pub fn unitarity_residual(&self) -> f64 {
        let [[a, b], [c, d]] = self.as_rows();
        let e00 = a * a.conj() + b * b.conj() - 1.0;
        let e01 = a * c.conj() + b * d.conj();
        let e10 = c * a.conj() + d * b.conj();
        let e11 = c * c.conj() + d * d.conj() - 1.0;
        [e00, e01, e10, e11]
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn det(&self) -> Cx {
        self.t11 * self.t22 - self.r12 * self.r21
    }
}

/// Current-amplitude scattering matrix of a single interface.
///
/// With D = Y2·cos θ1 + Y1·cos θ2 the entries are
/// t = 2·sqrt(Y1·Y2·cos θ1·cos θ2)/D and r12 = −r21 = (Y2·cos θ1 − Y1·cos θ2)/D,
/// which keeps t² + r² = 1 at every propagating angle.
pub fn interface_matrix(
    m1: &Medium,
    m2: &Medium,
    e_ev: f64,
    theta1_rad: f64,
) -> Result<ScatterMatrix2, ScatterError> {
    let theta2 = snell_angle(m1, m2, e_ev, theta1_rad)?;
    let y1 = admittance(m1, e_ev)?;
    let y2 = admittance(m2, e_ev)?;
    let (c1, c2) = (theta1_rad.cos(), theta2.cos());
    let d = y2 * c1 + y1 * c2;
    let t = 2.0 * (y1 * y2 * c1 * c2).sqrt() / d;
    let r = (y2 * c1 - y1 * c2) / d;
    Ok(ScatterMatrix2 {
        t11: Cx::new(t, 0.0),
        r12: Cx::new(r, 0.0),
        r21: Cx::new(-r, 0.0),
        t22: Cx::new(t, 0.0),
    })
}

/// A finite barrier slab embedded in an outer medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabSpec {
    pub outer: Medium,
    pub barrier: Medium,
    pub length_m: f64,
    pub incidence_rad: f64,
}

/// Scattering matrix of the slab from the closed-form geometric series of
/// internal reflections. With r0 the internal interface reflection and
/// p = γ2·l the single-crossing phase,
/// r = −r0·(1 − e^{−2jp})/(1 − r0²·e^{−2jp}) and
/// t = (1 − r0²)·e^{−jp}/(1 − r0²·e^{−2jp}).
/// The slab is mirror symmetric, so both ports share r and t.
pub fn slab_matrix(slab: &SlabSpec, e_ev: f64) -> Result<ScatterMatrix2, ScatterError> {
    let s0 = interface_matrix(&slab.outer, &slab.barrier, e_ev, slab.incidence_rad)?;
    let r0 = s0.r21.re;
    let p = slab.barrier.gamma(e_ev)? * slab.length_m;
    let w = Cx::from_polar(1.0, -p);
    let z = w * w;
    let denom = Cx::new(1.0, 0.0) - r0 * r0 * z;
    let r = -r0 * (Cx::new(1.0, 0.0) - z) / denom;
    let t = (1.0 - r0 * r0) * w / denom;
    Ok(ScatterMatrix2 {
        t11: t,
        r12: r,
        r21: r,
        t22: t,
    })
}

/// Barrier potential that makes a slab in `outer` split 50/50:
/// the kinetic energy over the barrier must be (3 − 2√2) times the kinetic
/// energy outside, so V2 = E − (3 − 2√2)(E − V1).
pub fn fifty_fifty_barrier(e_ev: f64, v1_ev: f64) -> Result<f64, ScatterError> {
    if e_ev <= v1_ev {
        return Err(ScatterError::EvanescentMedium {
            v_ev: v1_ev,
            e_ev,
        });
    }
    let ratio = 3.0 - 2.0 * std::f64::consts::SQRT_2;
    Ok(e_ev - ratio * (e_ev - v1_ev))
}

/// Slab length putting the crossing phase on the quarter-wave point:
/// l = (4n − 1)·π/(2·γ2) for positive integer n, so that e^{−jγ2·l} = j and
/// a 50/50 slab realises the matrix (1/√2)·[[j, 1], [1, j]].
///
/// Panics if `n` is zero.
pub fn quarter_phase_length(barrier: &Medium, e_ev: f64, n: u32) -> Result<f64, ScatterError> {
    assert!(n >= 1, "quarter-phase index n must be positive");
    let g2 = barrier.gamma(e_ev)?;
    Ok((4.0 * n as f64 - 1.0) * std::f64::consts::PI / (2.0 * g2))
}

/// Probability that two electrons entering opposite ports leave through
/// opposite ports, |t11·t22 − r12·r21|². Requires a unitary matrix.
pub fn coincidence_probability(s: &ScatterMatrix2) -> Result<f64, ScatterError> {
    let residual = s.unitarity_residual();
    if residual > tol::UNITARITY {
        return Err(ScatterError::NonUnitary { residual });
    }
    Ok(s.det().norm_sqr())
}

/// Spin-resolved exit probabilities of the two-port interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortProbabilities {
    pub p0_up: f64,
    pub p0_down: f64,
    pub p1_up: f64,
    pub p1_down: f64,
}

impl PortProbabilities {
    pub fn sum(&self) -> f64 {
        self.p0_up + self.p0_down + self.p1_up + self.p1_down
    }
}

/// Ideal interferometer: splitter, spin rotation by `theta` about y in the
/// port-1 arm, then a second identical splitter. Both splitters are the
/// unit-normalised matrix (1/√2)·[[1, 1], [−1, 1]] acting on the port
/// amplitudes; with no rotation the pair acts as a port inverter.
///
/// For injection at port 0 with spin up this reduces to
/// p0_up = sin⁴(θ/4), p1_up = cos⁴(θ/4), p0_down = p1_down = sin²(θ/2)/4.
pub fn interferometer_probabilities(
    theta_rad: f64,
    input_port: usize,
    input_spin: Spin,
) -> PortProbabilities {
    assert!(input_port < 2, "input port must be 0 or 1");
    // state vector over |port ⊗ spin⟩ = (0↑, 0↓, 1↑, 1↓)
    let mut psi = [Cx::new(0.0, 0.0); 4];
    let idx = input_port * 2 + if input_spin == Spin::Up { 0 } else { 1 };
    psi[idx] = Cx::new(1.0, 0.0);

    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let splitter = |psi: &mut [Cx; 4]| {
        for s in 0..2 {
            let a = psi[s];
            let b = psi[2 + s];
            psi[s] = inv_sqrt2 * (a + b);
            psi[2 + s] = inv_sqrt2 * (-a + b);
        }
    };

    splitter(&mut psi);
    // rotation about y by theta on the spin travelling in arm 1
    let (c, s) = ((theta_rad / 2.0).cos(), (theta_rad / 2.0).sin());
    let (u, d) = (psi[2], psi[3]);
    psi[2] = c * u - s * d;
    psi[3] = s * u + c * d;
    splitter(&mut psi);

    PortProbabilities {
        p0_up: psi[0].norm_sqr(),
        p0_down: psi[1].norm_sqr(),
        p1_up: psi[2].norm_sqr(),
        p1_down: psi[3].norm_sqr(),
    }
}
