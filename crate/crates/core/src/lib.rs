//! Local-unitary equivalence of multi-qubit mixed states.
//!
//! Two N-qubit states are compared through their Bloch correlation tensors.
//! Singular spectra of every mode unfolding give a fast necessary test; a
//! search over SO(3) tuples, lifted to SU(2) and verified on the density
//! matrices, settles the positive case with explicit local unitaries.

pub mod bloch;
pub mod cli;
pub mod error;
pub mod hosvd;
pub mod io;
pub mod liegroup;
pub mod oracle;
pub mod qstate;
pub mod report;
pub mod symsearch;

pub use error::{Error, Result};
