//! Irreversible photon transfer between two cavity modes mediated by a
//! spectrally broadened ensemble of Λ-type atoms.
//!
//! The crate models the system at three levels:
//!
//! - [`lindblad`]: master equation for the photon modes after the bath of
//!   atomic excitations has been eliminated, plus the closed-form long-time
//!   map in [`transfer_map`].
//! - [`reservoir`]: exact single-excitation dynamics against a discrete
//!   comb of atomic spectral classes, including repeated-measurement
//!   (Zeno / anti-Zeno) protocols and two-channel interference.
//! - [`diode`]: single-photon scattering through both cavities with
//!   discretized input/output continua, and its Markov-reduced counterpart.

pub mod diode;
pub mod error;
pub mod fock;
pub mod lindblad;
pub mod ode;
pub mod reservoir;
pub mod transfer_map;

pub use error::{Error, Result};
