//! Instance documents, built-in fixtures, QUBO/Ising coordinate exports and
//! train diagrams.

pub mod diagram;
pub mod export;
pub mod fixtures;
pub mod instance;

pub use diagram::DiagramData;
pub use instance::{load_instance, parse_instance, serialize_instance, ParseError};
