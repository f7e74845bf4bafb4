//! Simulation and analysis of autonomous error correction for a qubit
//! stored in four-component cat states of a cavity, with a dispersively
//! coupled ancilla qubit.

pub mod error;
pub mod hilbert;
pub mod states;
pub mod dynamics;
pub mod gates;
pub mod circuits;
pub mod analysis;
pub mod cli;

pub use error::{Error, Result};
pub use hilbert::{CMatrix, CVector, C64};
