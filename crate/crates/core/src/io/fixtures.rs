//! Built-in problem instances, embedded so the CLI and tests can load them
//! by name without a filesystem path.

use crate::model::RailwayInstance;

pub const NAMES: [&str; 3] = ["line216", "line191-reconstructed", "crossing"];

/// Raw document text of a built-in fixture.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "line216" => Some(include_str!("../../fixtures/line216.rail")),
        "line191-reconstructed" => {
            Some(include_str!("../../fixtures/line191-reconstructed.rail"))
        }
        "crossing" => Some(include_str!("../../fixtures/crossing.rail")),
        _ => None,
    }
}

/// Parse a built-in fixture.
pub fn load(name: &str) -> Option<RailwayInstance> {
    source(name).map(|text| {
        super::instance::parse_instance(text)
            .unwrap_or_else(|e| panic!("built-in fixture {name} is invalid: {e}"))
    })
}
