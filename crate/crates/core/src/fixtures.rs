//! Device specs shipped with the crate.

use crate::registry::Registry;

/// JSON text of the built-in registry.
pub const DEVICES_JSON: &str = include_str!("../fixtures/devices.json");

pub fn builtin_registry() -> Registry {
    Registry::from_json(DEVICES_JSON).expect("bundled device registry is valid")
}
