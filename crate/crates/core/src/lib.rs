//! Nonequilibrium steady state of a finite quantum wire between two biased leads.
//!
//! The wire and both leads are described by their unperturbed Green functions
//! ([`model`]). Coupling the leads at the wire ends is handled exactly, either
//! through closed-form boundary solutions ([`dyson`]) or by a dense matrix
//! solve of the same Dyson equations ([`oracle`]). Frequency integrals use
//! Romberg quadrature ([`quadrature`]) to give the one-particle correlation
//! `C_ij` and the current `I` ([`observables`]).

pub mod cli;
pub mod dyson;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod quadrature;
pub mod validation;

pub use model::{ModelParams, Side};
