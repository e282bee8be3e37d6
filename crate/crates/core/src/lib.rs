//! Simulation toolkit for a two-atom Rydberg gate mediated by a thermal
//! microwave cavity.
//!
//! - [`qspace`]: basis bookkeeping and sparse operators
//! - [`model`]: rotating-frame Hamiltonian and jump operators
//! - [`effective`]: perturbative couplings, condition checks, thermal statistics
//! - [`dynamics`]: unitary and master-equation propagation, frequency and fidelity analysis
//! - [`experiments`]: configuration and the canned runs behind the CLI

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod experiments;
pub mod model;
pub mod par;
pub mod qspace;

pub use error::{Error, Result};
pub use model::SystemParams;
pub use qspace::{CompositeSpace, Level, Operator, QuantumState, C64};
