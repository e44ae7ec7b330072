//! Direct-collocation optimal control on multiple Legendre-Gauss-Radau
//! domains, with automatic detection of state-path-constraint activation
//! structure, tangency enforcement via index reduction, and mesh refinement.
//!
//! The crate is organized bottom-up:
//!
//! * [`lgr`] — Radau collocation rules, differentiation matrices, and
//!   barycentric interpolation.
//! * [`ocp`] — declarative Bolza problem descriptions with path-constraint
//!   classification and analytic constraint time derivatives.
//! * [`transcription`] — lowering of a problem plus a domain layout into a
//!   sparse NLP with interface times as decision variables.
//! * [`nlp`] — the sparse NLP solver contract and the built-in primal-dual
//!   interior-point backend.
//! * [`detection`] — activation/deactivation detection and domain
//!   decomposition.
//! * [`refinement`] — discretization error estimation, mesh refinement, and
//!   the outer solve loop.
//! * [`rlve`] — the reusable-launch-vehicle entry benchmark family.

pub mod detection;
pub mod lgr;
pub mod nlp;
pub mod ocp;
pub mod refinement;
pub mod rlve;
pub mod transcription;

pub use lgr::{DiffMatrix, LgrRule};
pub use nlp::{NlpResult, NlpSolveOptions, NlpStatus};
