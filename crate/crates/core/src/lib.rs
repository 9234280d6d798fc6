//! Complete complex root census for the synchronization equations of
//! Kuramoto oscillators on a cycle with uniform coupling.
//!
//! The algebraic system is split along the facets of its adjacency polytope;
//! every facet subsystem is solved in closed form and its roots are
//! continued to roots of the full system.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod model;
pub mod newton;
pub mod poly;
pub mod polytope;
pub mod rng;
pub mod solver;
pub mod toric;

pub use error::{Error, Result};
pub use model::{ComplexPoint, CycleInstance, PhaseState};
