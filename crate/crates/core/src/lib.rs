//! Interactive configuration on top of reduced ordered BDDs.
//!
//! A [`model::ConfigModel`] is compiled once ([`encode::compile`]) into a BDD
//! of all its valid configurations. During interaction a
//! [`session::Session`] restricts that BDD with each user choice and
//! recomputes the valid domain of every variable ([`cvd`]), so that any value
//! offered to the user can still be completed to a valid configuration.

pub mod artifact;
pub mod bdd;
pub mod cvd;
pub mod encode;
pub mod fuzz;
pub mod model;
pub mod session;

pub use bdd::{BddStore, NodeId};
pub use encode::{compile, CompiledSpace};
pub use model::{parse_model, Assignment, ConfigModel};
pub use session::{Session, SessionError, Status};
