//! Weak-measurement time observables for finite-dimensional quantum
//! systems.
//!
//! The library computes how long an observable holds a given value during
//! the evolution of a small quantum system (the unconditional dwell time),
//! and the postselected version of the same question: the time conditioned
//! on finding the system in a chosen final subspace. The conditional
//! quantity splits into a symmetrized component and a commutator component;
//! when the relevant commutator does not vanish, the measured duration
//! depends on the pointer state of the measuring device, and the
//! [`composite`] module demonstrates exactly that by simulating the full
//! system-pointer composite at finite coupling.
//!
//! Modules:
//! - [`linalg`]: dense complex operators, states, Hermitian spectra.
//! - [`model`]: scenario validation (Hamiltonian, observable, finals).
//! - [`times`]: the accumulated operator, dwell and conditional times,
//!   definiteness condition, sum rules.
//! - [`twolevel`]: closed forms for the driven two-level system.
//! - [`composite`]: finite-coupling pointer simulation and coupling sweeps.
//! - [`scenario`], [`series`], [`commands`]: the JSON-scenario/CSV layer
//!   behind the `weaktime` binary.

pub mod commands;
pub mod composite;
pub mod error;
pub mod linalg;
pub mod model;
pub mod scenario;
pub mod series;
pub mod times;
pub mod twolevel;

pub use error::{Error, Result};
