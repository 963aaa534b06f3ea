//! Reduced-basis Hamiltonians for the three models.

pub mod dicke;
pub mod fock;
pub mod lmgm;
pub mod tfim;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::ScalingExponents;

pub use dicke::{build_dicke, DickeBasis, PlainFockDicke};
pub use lmgm::{build_lmgm, lmgm_interaction, BandedHamiltonian};
pub use tfim::{
    build_tfim_block, tfim_block_interaction, tfim_chi_exact, tfim_gap_exact, SpinRing, TfimBlock,
};

pub const DEFAULT_TRUNCATION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tfim,
    Lmgm,
    Dicke,
}

impl ModelKind {
    pub fn exponents(self) -> ScalingExponents {
        match self {
            ModelKind::Tfim => ScalingExponents::ising(),
            ModelKind::Lmgm | ModelKind::Dicke => ScalingExponents::fully_connected(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tfim => "tfim",
            ModelKind::Lmgm => "lmgm",
            ModelKind::Dicke => "dicke",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tfim" => Ok(ModelKind::Tfim),
            "lmgm" | "lmg" => Ok(ModelKind::Lmgm),
            "dicke" | "dm" => Ok(ModelKind::Dicke),
            other => Err(Error::Model(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_qubits: usize,
    /// Displaced-Fock truncation `M`; only the Dicke model reads it.
    pub truncation: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n_qubits: usize) -> Result<Self> {
        Self::with_truncation(kind, n_qubits, DEFAULT_TRUNCATION)
    }

    pub fn with_truncation(kind: ModelKind, n_qubits: usize, truncation: usize) -> Result<Self> {
        if n_qubits < 2 || !n_qubits.is_multiple_of(2) {
            return Err(Error::Model(format!(
                "{kind}: N must be even and at least 2, got {n_qubits}"
            )));
        }
        if kind == ModelKind::Dicke && truncation == 0 {
            return Err(Error::Model(
                "dicke: truncation M must be at least 1".into(),
            ));
        }
        Ok(Self {
            kind,
            n_qubits,
            truncation,
        })
    }

    pub fn tfim(n_qubits: usize) -> Result<Self> {
        Self::new(ModelKind::Tfim, n_qubits)
    }

    pub fn lmgm(n_qubits: usize) -> Result<Self> {
        Self::new(ModelKind::Lmgm, n_qubits)
    }

    pub fn dicke(n_qubits: usize, truncation: usize) -> Result<Self> {
        Self::with_truncation(ModelKind::Dicke, n_qubits, truncation)
    }

    pub fn exponents(&self) -> ScalingExponents {
        self.kind.exponents()
    }

    /// Dimension of one reduced problem (a single momentum block for TFIM).
    pub fn effective_dimension(&self) -> usize {
        match self.kind {
            ModelKind::Tfim => 2,
            ModelKind::Lmgm => lmgm::dimension(self.n_qubits),
            ModelKind::Dicke => dicke::dimension(self.n_qubits, self.truncation),
        }
    }

    /// Tracked levels when none are requested, capped by the dimension.
    pub fn default_levels(&self) -> usize {
        match self.kind {
            ModelKind::Tfim => 2,
            _ => 20.min(self.effective_dimension()),
        }
    }
}
