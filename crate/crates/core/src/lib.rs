//! Spin-resolved transport simulator for a reconfigurable two-nanowire
//! logic device.
//!
//! The device encodes one qubit in the channel index of a pair of coupled
//! nanowires ("pseudo-spin") and one in the carrier spin. Tunnel-coupled
//! wire segments act as beam splitters on the channel qubit; gated Rashba
//! segments rotate the spin. The crate provides:
//!
//! - [`scatter`]: analytic scattering matrices for barrier beam splitters,
//! - [`gatesim`]: an ideal two-qubit gate-level reference,
//! - [`lattice`] and [`negf`]: a spin-resolved tight-binding device model
//!   with a recursive Green's-function transport solver,
//! - [`experiments`]: end-to-end device runs (Deutsch-Jozsa, search,
//!   NAND, spin-initialisation sweep) compared against the references,
//! - [`cli`]: the `spinwire` command-line front end.

pub mod cli;
pub mod constants;
pub mod experiments;
pub mod gatesim;
pub mod lattice;
pub mod linalg;
pub mod negf;
pub mod scatter;

use serde::{Deserialize, Serialize};

/// Carrier spin projection along the wire quantisation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    /// Basis offset inside a site block (up first).
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Spin::Up => "up",
            Spin::Down => "down",
        }
    }
}

impl std::fmt::Display for Spin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
