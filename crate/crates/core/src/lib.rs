//! Geometry, templates and capture plumbing for two-phone stereo rigs.
//!
//! The crate turns phone specifications into a base model that places two
//! back cameras one inter-pupillary distance apart, generates printable
//! holder templates from it, and simulates the pairing and sync exchange the
//! two phones run before their frames are merged into stereo output.

// `!(x > 0.0)` is used on purpose so NaN is rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod exec;
pub mod fixtures;
pub mod geometry;
pub mod guidance;
pub mod merge;
pub mod registry;
pub mod sync;
pub mod template;

pub use alignment::{
    camera_separation, compute_base_model, compute_base_model_with_ipd, validate_placement, AlignmentError, Axis,
    BaseModel, Ipd, LayoutConfig, Orientation, Stacking, Violation,
};
pub use exec::Exec;
pub use geometry::{Point2, Rect, Rotation, GEOMETRY_TOLERANCE_MM};
pub use registry::{lookup, negotiate, parse_device_specs, CapabilityProfile, DeviceSpec, Registry, RegistryError};
