//! Independent reference engines used to check the schemes, and the
//! hard-function family.
//!
//! None of these share expectation or LP-assembly code with the schemes.

pub mod bracket;
pub mod generate;
pub mod hard;
pub mod quadrature;
pub mod scenario;
pub mod vertex;

pub use bracket::{bracket, Bracket, BracketOptions};
pub use generate::{random_instance, GenOptions};
pub use scenario::{deterministic_equivalent, EquivalentValue};
pub use vertex::{enumerate_vertices, VertexOutcome};
