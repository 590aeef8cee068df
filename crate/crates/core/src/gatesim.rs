//! Ideal two-qubit reference simulator.
//!
//! The two qubits are the channel index ("pseudo-spin", first slot) and the
//! carrier spin (second slot), with basis order |0↑⟩, |0↓⟩, |1↑⟩, |1↓⟩.
//! Everything here is exact 4×4 unitary algebra; the transport engine is
//! validated against these outcomes.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::Spin;

type Cx = Complex64;

const ZERO: Cx = Cx::new(0.0, 0.0);
const ONE: Cx = Cx::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("state norm deviates from one by {deviation:.3e}")]
    NotNormalized { deviation: f64 },
    #[error("outcome is ambiguous: largest probability {p_max:.4} below threshold")]
    AmbiguousOutcome { p_max: f64 },
}

/// Normalised state over |pseudo ⊗ spin⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    pub amps: [Cx; 4],
}

impl TwoQubitState {
    pub fn basis(pseudo: usize, spin: Spin) -> Self {
        assert!(pseudo < 2);
        let mut amps = [ZERO; 4];
        amps[pseudo * 2 + spin.index()] = ONE;
        TwoQubitState { amps }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> [f64; 4] {
        [
            self.amps[0].norm_sqr(),
            self.amps[1].norm_sqr(),
            self.amps[2].norm_sqr(),
            self.amps[3].norm_sqr(),
        ]
    }

    /// Marginal probability that the pseudo-spin reads `pseudo`.
    pub fn pseudo_marginal(&self, pseudo: usize) -> f64 {
        self.amps[pseudo * 2].norm_sqr() + self.amps[pseudo * 2 + 1].norm_sqr()
    }

    pub fn check_normalized(&self) -> Result<(), GateError> {
        let deviation = (self.norm_sqr() - 1.0).abs();
        if deviation > 1e-12 {
            return Err(GateError::NotNormalized { deviation });
        }
        Ok(())
    }
}

/// Dense 4×4 unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct GateUnitary {
    pub m: [[Cx; 4]; 4],
}

impl GateUnitary {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for i in 0..4 {
            m[i][i] = ONE;
        }
        GateUnitary { m }
    }

    /// (pseudo 2×2) ⊗ (spin 2×2).
    pub fn kron(pseudo: [[Cx; 2]; 2], spin: [[Cx; 2]; 2]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for pr in 0..2 {
            for pc in 0..2 {
                for sr in 0..2 {
                    for sc in 0..2 {
                        m[pr * 2 + sr][pc * 2 + sc] = pseudo[pr][pc] * spin[sr][sc];
                    }
                }
            }
        }
        GateUnitary { m }
    }

    pub fn on_spin(spin: [[Cx; 2]; 2]) -> Self {
        Self::kron(eye2(), spin)
    }

    pub fn on_pseudospin(pseudo: [[Cx; 2]; 2]) -> Self {
        Self::kron(pseudo, eye2())
    }

    pub fn apply(&self, state: &TwoQubitState) -> TwoQubitState {
        let mut amps = [ZERO; 4];
        for r in 0..4 {
            for c in 0..4 {
                amps[r] += self.m[r][c] * state.amps[c];
            }
        }
        TwoQubitState { amps }
    }

    pub fn then(&self, later: &GateUnitary) -> GateUnitary {
        // later · self, i.e. `self` acts first
        let mut m = [[ZERO; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                for k in 0..4 {
                    m[r][c] += later.m[r][k] * self.m[k][c];
                }
            }
        }
        GateUnitary { m }
    }

    pub fn unitarity_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..4 {
            for c in 0..4 {
                let mut dot = ZERO;
                for k in 0..4 {
                    dot += self.m[r][k] * self.m[c][k].conj();
                }
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &GateUnitary) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..4 {
            for c in 0..4 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        worst
    }

    pub fn scaled(&self, factor: Cx) -> GateUnitary {
        let mut m = self.m;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= factor;
            }
        }
        GateUnitary { m }
    }
}

fn eye2() -> [[Cx; 2]; 2] {
    [[ONE, ZERO], [ZERO, ONE]]
}

fn hadamard2() -> [[Cx; 2]; 2] {
    let h = Cx::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Real Hadamard on the carrier spin.
pub fn hadamard_spin() -> GateUnitary {
    GateUnitary::on_spin(hadamard2())
}

/// Real Hadamard on the channel qubit.
pub fn hadamard_pseudospin() -> GateUnitary {
    GateUnitary::on_pseudospin(hadamard2())
}

/// Spin rotation about y: Ry(φ) = exp(−i·φ·σy/2).
pub fn ry_spin(phi: f64) -> GateUnitary {
    let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
    GateUnitary::on_spin([
        [Cx::new(c, 0.0), Cx::new(-s, 0.0)],
        [Cx::new(s, 0.0), Cx::new(c, 0.0)],
    ])
}

/// Spin rotation about z: Rz(φ) = diag(e^{−iφ/2}, e^{iφ/2}).
pub fn rz_spin(phi: f64) -> GateUnitary {
    GateUnitary::on_spin([
        [Cx::from_polar(1.0, -phi / 2.0), ZERO],
        [ZERO, Cx::from_polar(1.0, phi / 2.0)],
    ])
}

pub fn pauli_x_spin() -> GateUnitary {
    GateUnitary::on_spin([[ZERO, ONE], [ONE, ZERO]])
}

pub fn pauli_z_spin() -> GateUnitary {
    GateUnitary::on_spin([[ONE, ZERO], [ZERO, -ONE]])
}

/// Spin flip conditioned on pseudo-spin 1.
pub fn cnot() -> GateUnitary {
    let mut g = GateUnitary::identity();
    g.m[2][2] = ZERO;
    g.m[3][3] = ZERO;
    g.m[2][3] = ONE;
    g.m[3][2] = ONE;
    g
}

/// Scalar phase applied only to the pseudo-spin-1 channel.
pub fn phase_on_pseudospin1(phi: f64) -> GateUnitary {
    let p = Cx::from_polar(1.0, phi);
    let mut g = GateUnitary::identity();
    g.m[2][2] = p;
    g.m[3][3] = p;
    g
}

/// Channel inverter: the product of two splitter matrices
/// (1/√2)·[[1, 1], [−1, 1]], which maps |0⟩ → −|1⟩ and |1⟩ → |0⟩.
pub fn pseudospin_not() -> GateUnitary {
    GateUnitary::on_pseudospin([[ZERO, ONE], [-ONE, ZERO]])
}

/// The four single-call oracles of the two-channel algorithm.
///
/// f0 is the identity; f1 flips the spin in both channels and keeps the
/// −i factor its rotation-gate decomposition produces; f2 and f3 flip the
/// spin in exactly one channel, where the additional channel phase factor
/// makes them the exact (anti-)controlled-NOT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleCase {
    F0,
    F1,
    F2,
    F3,
}

impl OracleCase {
    pub const ALL: [OracleCase; 4] = [
        OracleCase::F0,
        OracleCase::F1,
        OracleCase::F2,
        OracleCase::F3,
    ];

    pub fn is_constant(self) -> bool {
        matches!(self, OracleCase::F0 | OracleCase::F1)
    }

    pub fn label(self) -> &'static str {
        match self {
            OracleCase::F0 => "f0",
            OracleCase::F1 => "f1",
            OracleCase::F2 => "f2",
            OracleCase::F3 => "f3",
        }
    }
}

pub fn oracle_unitary(case: OracleCase) -> GateUnitary {
    match case {
        OracleCase::F0 => GateUnitary::identity(),
        // Ry(π)·Rz(π) applied in both channels equals −i·X on the spin.
        OracleCase::F1 => pauli_x_spin().scaled(Cx::new(0.0, -1.0)),
        OracleCase::F2 => cnot(),
        OracleCase::F3 => {
            // spin flip on channel 0 instead of channel 1
            let mut g = GateUnitary::identity();
            g.m[0][0] = ZERO;
            g.m[1][1] = ZERO;
            g.m[0][1] = ONE;
            g.m[1][0] = ONE;
            g
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DjVerdict {
    Constant,
    Balanced,
}

#[derive(Debug, Clone)]
pub struct DjOutcome {
    pub case: OracleCase,
    pub p_pseudo0: f64,
    pub p_pseudo1: f64,
    pub verdict: DjVerdict,
    pub final_state: TwoQubitState,
}

/// One-call function classification: prepare |0↓⟩, spin Hadamard, channel
/// Hadamard, the oracle, channel Hadamard, then read the channel marginal.
pub fn run_dj(case: OracleCase) -> Result<DjOutcome, GateError> {
    let mut state = TwoQubitState::basis(0, Spin::Down);
    for gate in [
        hadamard_spin(),
        hadamard_pseudospin(),
        oracle_unitary(case),
        hadamard_pseudospin(),
    ] {
        state = gate.apply(&state);
    }
    state.check_normalized()?;
    let p0 = state.pseudo_marginal(0);
    let p1 = state.pseudo_marginal(1);
    let verdict = if p0 > 0.99 {
        DjVerdict::Constant
    } else if p1 > 0.99 {
        DjVerdict::Balanced
    } else {
        return Err(GateError::AmbiguousOutcome { p_max: p0.max(p1) });
    };
    Ok(DjOutcome {
        case,
        p_pseudo0: p0,
        p_pseudo1: p1,
        verdict,
        final_state: state,
    })
}

/// Marked basis state for the two-qubit search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct GroverTarget {
    pub pseudo: usize,
    pub spin: Spin,
}

impl GroverTarget {
    pub const ALL: [GroverTarget; 4] = [
        GroverTarget { pseudo: 0, spin: Spin::Up },
        GroverTarget { pseudo: 0, spin: Spin::Down },
        GroverTarget { pseudo: 1, spin: Spin::Up },
        GroverTarget { pseudo: 1, spin: Spin::Down },
    ];

    pub fn index(self) -> usize {
        self.pseudo * 2 + self.spin.index()
    }

    pub fn label(self) -> String {
        format!("{}{}", self.pseudo, if self.spin == Spin::Up { "0" } else { "1" })
    }
}

/// Sign flip on the marked state: I − 2|w⟩⟨w|.
pub fn grover_oracle(target: GroverTarget) -> GateUnitary {
    let mut g = GateUnitary::identity();
    g.m[target.index()][target.index()] = -ONE;
    g
}

/// Inversion about the mean, written as H⊗H·(2|00⟩⟨00| − I)·H⊗H.
pub fn grover_diffusion() -> GateUnitary {
    let hh = hadamard_pseudospin().then(&hadamard_spin());
    let mut flip = GateUnitary::identity().scaled(-ONE);
    flip.m[0][0] = ONE;
    hh.then(&flip).then(&hh)
}

#[derive(Debug, Clone)]
pub struct GroverOutcome {
    pub target: GroverTarget,
    pub probabilities: [f64; 4],
    pub dominant: GroverTarget,
}

/// Single-iteration two-qubit search from |0↑⟩; exact for n = 2 qubits.
pub fn run_grover(target: GroverTarget) -> Result<GroverOutcome, GateError> {
    let mut state = TwoQubitState::basis(0, Spin::Up);
    for gate in [
        hadamard_spin(),
        hadamard_pseudospin(),
        grover_oracle(target),
        grover_diffusion(),
    ] {
        state = gate.apply(&state);
    }
    state.check_normalized()?;
    let probabilities = state.probabilities();
    let (idx, &p_max) = probabilities
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("four probabilities");
    if p_max < 0.99 {
        return Err(GateError::AmbiguousOutcome { p_max });
    }
    let dominant = GroverTarget {
        pseudo: idx / 2,
        spin: if idx % 2 == 0 { Spin::Up } else { Spin::Down },
    };
    Ok(GroverOutcome {
        target,
        probabilities,
        dominant,
    })
}

#[derive(Debug, Clone)]
pub struct NandOutcome {
    pub pseudo_in: usize,
    pub spin_in: Spin,
    pub p_port1_up: f64,
    pub high: bool,
}

/// Channel inverter followed by an up-spin detector at port 1. The output
/// is high only for the (port 0, spin up) input.
pub fn run_nand(pseudo_in: usize, spin_in: Spin) -> Result<NandOutcome, GateError> {
    let state = pseudospin_not().apply(&TwoQubitState::basis(pseudo_in, spin_in));
    state.check_normalized()?;
    let p = state.probabilities()[2]; // |1↑⟩
    Ok(NandOutcome {
        pseudo_in,
        spin_in,
        p_port1_up: p,
        high: p > 0.99,
    })
}
