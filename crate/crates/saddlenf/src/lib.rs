//! Polynomial normal forms near saddle-center equilibria, together with the
//! numerics needed to remove the leftover remainder: resonance enumeration,
//! smoothness budgets, logarithmic norms, sign-symmetry checks, a
//! characteristics solver for the cohomological equation and NHIM
//! rate-condition diagnostics.
//!
//! The crate is organised bottom-up. [`polycore`] holds the sparse polynomial
//! algebra everything else is written in; [`cohsolver`] and [`nhimverify`]
//! work on real-valued evaluations of those polynomials.

pub mod budget;
pub mod cli;
pub mod cohsolver;
pub mod error;
pub mod nhimverify;
pub mod normalform;
pub mod ode;
pub mod polycore;
pub mod resonance;
pub mod signsym;
pub mod spectral;

pub use error::{Error, Result};
pub use polycore::{
    MultiIndex, PolyField, PolySeries, Roster, RosterEntry, SignGroup, SymplecticForm, VarClass,
    C64,
};
