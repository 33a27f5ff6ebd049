//! Device specifications and pairwise capability negotiation.
//!
//! A registry is loaded from a JSON document: a top-level array of device
//! objects. Lengths are millimeters measured on the back face, origin at its
//! top-left corner, +x along the width and +y along the length.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;

/// Capture resolution in pixels. Ordered by total pixel count, ties broken
/// by width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn pixel_count(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }
}

impl Ord for Resolution {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pixel_count().cmp(&other.pixel_count()).then(self.width.cmp(&other.width))
    }
}

impl PartialOrd for Resolution {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl Serialize for Resolution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.width, self.height].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Resolution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [width, height] = <[u32; 2]>::deserialize(d)?;
        Ok(Resolution { width, height })
    }
}

/// Physical and capture description of one phone model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub model_id: String,
    /// W
    pub body_width: f64,
    /// L
    pub body_length: f64,
    /// H
    pub body_thickness: f64,
    pub camera_center: Point2,
    pub screen_width_px: u32,
    pub screen_height_px: u32,
    /// Pixels per millimeter.
    pub pixel_density: f64,
    pub resolutions: BTreeSet<Resolution>,
    pub frame_rates: BTreeSet<u32>,
    pub focus_modes: BTreeSet<String>,
    pub capture_modes: BTreeSet<String>,
    /// Free-form vendor data. Carried through untouched, never interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

const REQUIRED_FIELDS: [&str; 12] = [
    "model_id",
    "body_width",
    "body_length",
    "body_thickness",
    "camera_center",
    "screen_width_px",
    "screen_height_px",
    "pixel_density",
    "resolutions",
    "frame_rates",
    "focus_modes",
    "capture_modes",
];

/// A broken [`DeviceSpec`] invariant.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum SpecViolation {
    #[error("{field} must be strictly positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("camera outside body: ({x}, {y}) not within {width} x {length}")]
    CameraOutsideBody { x: f64, y: f64, width: f64, length: f64 },
    #[error("{0} must not be empty")]
    EmptySet(&'static str),
    #[error("{field} must be strictly positive")]
    ZeroCapability { field: &'static str },
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("malformed device document: {0}")]
    Malformed(String),
    #[error("device #{index}: missing required field `{field}`")]
    MissingField { index: usize, field: &'static str },
    #[error("device `{model_id}`: {violation}")]
    Invalid { model_id: String, violation: SpecViolation },
    #[error("duplicate model_id `{0}`")]
    DuplicateModel(String),
    #[error("unknown model_id `{0}`")]
    UnknownModel(String),
}

impl DeviceSpec {
    /// Checks every structural invariant of the spec.
    pub fn validate(&self) -> Result<(), SpecViolation> {
        for (field, value) in [
            ("body_width", self.body_width),
            ("body_length", self.body_length),
            ("body_thickness", self.body_thickness),
            ("pixel_density", self.pixel_density),
        ] {
            // NaN fails this comparison as well.
            if !(value > 0.0 && value.is_finite()) {
                return Err(SpecViolation::NonPositive { field, value });
            }
        }
        let c = self.camera_center;
        if !(c.x >= 0.0 && c.x <= self.body_width && c.y >= 0.0 && c.y <= self.body_length) {
            return Err(SpecViolation::CameraOutsideBody {
                x: c.x,
                y: c.y,
                width: self.body_width,
                length: self.body_length,
            });
        }
        if self.resolutions.is_empty() {
            return Err(SpecViolation::EmptySet("resolutions"));
        }
        if self.frame_rates.is_empty() {
            return Err(SpecViolation::EmptySet("frame_rates"));
        }
        if self.frame_rates.contains(&0) {
            return Err(SpecViolation::ZeroCapability { field: "frame_rates" });
        }
        if self.resolutions.iter().any(|r| r.width == 0 || r.height == 0) {
            return Err(SpecViolation::ZeroCapability { field: "resolutions" });
        }
        Ok(())
    }

    pub fn capabilities(&self) -> CapabilitySet {
        CapabilitySet {
            resolutions: self.resolutions.clone(),
            frame_rates: self.frame_rates.clone(),
            focus_modes: self.focus_modes.clone(),
            capture_modes: self.capture_modes.clone(),
        }
    }

    /// True when the physical description matches, ignoring the identifier.
    pub fn same_body_as(&self, other: &DeviceSpec) -> bool {
        self.body_width == other.body_width
            && self.body_length == other.body_length
            && self.body_thickness == other.body_thickness
            && self.camera_center == other.camera_center
    }
}

/// Parses a spec document. Order is preserved.
pub fn parse_device_specs(document: &str) -> Result<Vec<DeviceSpec>, RegistryError> {
    let value: serde_json::Value =
        serde_json::from_str(document).map_err(|e| RegistryError::Malformed(e.to_string()))?;
    let entries =
        value.as_array().ok_or_else(|| RegistryError::Malformed("top level must be an array of devices".into()))?;

    let mut specs = Vec::with_capacity(entries.len());
    let mut seen = HashSet::new();
    for (index, entry) in entries.iter().enumerate() {
        let obj =
            entry.as_object().ok_or_else(|| RegistryError::Malformed(format!("device #{index} is not an object")))?;
        if let Some(field) = REQUIRED_FIELDS.iter().find(|f| !obj.contains_key(**f)) {
            return Err(RegistryError::MissingField { index, field });
        }
        let spec: DeviceSpec = serde_json::from_value(entry.clone())
            .map_err(|e| RegistryError::Malformed(format!("device #{index}: {e}")))?;
        spec.validate().map_err(|violation| RegistryError::Invalid { model_id: spec.model_id.clone(), violation })?;
        if !seen.insert(spec.model_id.clone()) {
            return Err(RegistryError::DuplicateModel(spec.model_id));
        }
        specs.push(spec);
    }
    Ok(specs)
}

/// Serializes specs back into the document format accepted by
/// [`parse_device_specs`].
pub fn serialize_device_specs(specs: &[DeviceSpec]) -> String {
    serde_json::to_string_pretty(specs).expect("device specs always serialize")
}

pub fn lookup<'a>(registry: &'a [DeviceSpec], model_id: &str) -> Result<&'a DeviceSpec, RegistryError> {
    registry.iter().find(|d| d.model_id == model_id).ok_or_else(|| RegistryError::UnknownModel(model_id.to_string()))
}

/// Loaded, validated collection of device specs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Registry {
    devices: Vec<DeviceSpec>,
}

impl Registry {
    pub fn from_json(document: &str) -> Result<Self, RegistryError> {
        Ok(Self { devices: parse_device_specs(document)? })
    }

    pub fn to_json(&self) -> String {
        serialize_device_specs(&self.devices)
    }

    pub fn devices(&self) -> &[DeviceSpec] {
        &self.devices
    }

    pub fn lookup(&self, model_id: &str) -> Result<&DeviceSpec, RegistryError> {
        lookup(&self.devices, model_id)
    }
}

/// The capture settings a single device supports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilitySet {
    pub resolutions: BTreeSet<Resolution>,
    pub frame_rates: BTreeSet<u32>,
    pub focus_modes: BTreeSet<String>,
    pub capture_modes: BTreeSet<String>,
}

/// Capture settings agreed on by a device pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityProfile {
    pub resolution: Resolution,
    pub frame_rate: u32,
    pub focus_modes: BTreeSet<String>,
    pub capture_modes: BTreeSet<String>,
}

/// Largest value shared by both sets, or the smaller of the two maxima when
/// nothing is shared.
fn common_or_lower<T: Ord + Copy>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Option<T> {
    if let Some(shared) = a.iter().rev().find(|v| b.contains(v)) {
        return Some(*shared);
    }
    match (a.last(), b.last()) {
        (Some(x), Some(y)) => Some(*x.min(y)),
        _ => None,
    }
}

pub fn negotiate_sets(a: &CapabilitySet, b: &CapabilitySet) -> Option<CapabilityProfile> {
    Some(CapabilityProfile {
        resolution: common_or_lower(&a.resolutions, &b.resolutions)?,
        frame_rate: common_or_lower(&a.frame_rates, &b.frame_rates)?,
        focus_modes: a.focus_modes.intersection(&b.focus_modes).cloned().collect(),
        capture_modes: a.capture_modes.intersection(&b.capture_modes).cloned().collect(),
    })
}

/// Highest common capture profile of two valid specs.
pub fn negotiate(a: &DeviceSpec, b: &DeviceSpec) -> CapabilityProfile {
    negotiate_sets(&a.capabilities(), &b.capabilities())
        .expect("validated specs have non-empty resolution and frame-rate sets")
}
