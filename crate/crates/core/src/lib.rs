//! Model-based generation of conformance test suites from extended finite
//! state machine protocol models.
//!
//! The pipeline runs [`model::parse_model`] → [`model::apply_profile`] →
//! [`explore::explore`] → [`coverage::select`] → [`testgen::generate_suite`]
//! → [`docgen::emit_bundle`], with [`simulator::adequacy`] scoring the
//! resulting suite against seeded model mutants.

pub mod corpus;
pub mod coverage;
pub mod docgen;
pub mod explore;
pub mod model;
pub mod simulator;
pub mod testgen;

pub use model::{parse_model, validate, Model, Value};
