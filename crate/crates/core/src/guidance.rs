//! Alignment guidance for a user holding two phones: an on-screen grid
//! showing where the second camera must go, and a sensor check that compares
//! the devices' magnetometer and gyroscope readings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{BaseModel, Orientation, Stacking};
use crate::registry::DeviceSpec;

pub const DEFAULT_GRID_PITCH_MM: f64 = 10.0;
pub const DEFAULT_MAG_TOLERANCE_UT: f64 = 5.0;
pub const DEFAULT_GYRO_TOLERANCE_DPS: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GuidanceError {
    #[error("grid guidance needs a depth-stacked base model, got {0:?}")]
    NotDepthStacked(Stacking),
    #[error("target marker ({x:.1}, {y:.1}) px is off the {width}x{height} px screen")]
    TargetOffScreen { x: f64, y: f64, width: u32, height: u32 },
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("sensor readings: {0}")]
    Readings(String),
}

/// Integer pixel position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pixel {
    pub x: i64,
    pub y: i64,
}

/// Pixel position before rounding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubPixel {
    pub x: f64,
    pub y: f64,
}

impl SubPixel {
    pub fn round(self) -> Pixel {
        Pixel { x: self.x.round() as i64, y: self.y.round() as i64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x: i64,
    pub y: i64,
    pub width: i64,
    pub height: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOverlay {
    pub screen_width_px: u32,
    pub screen_height_px: u32,
    pub orientation: Orientation,
    pub pitch_mm: f64,
    pub pixel_density: f64,
    /// x positions of vertical lines.
    pub vertical_lines: Vec<i64>,
    /// y positions of horizontal lines.
    pub horizontal_lines: Vec<i64>,
    pub target_exact: SubPixel,
    pub target_marker: Pixel,
    /// Device B's body, clipped to the screen.
    pub box_marker: PixelRect,
}

/// Millimeters on device A's face to pixels on its screen.
pub fn mm_to_px(mm: f64, density: f64) -> f64 {
    mm * density
}

pub fn grid_overlay(base: &BaseModel, spec: &DeviceSpec) -> Result<GridOverlay, GuidanceError> {
    grid_overlay_with_pitch(base, spec, DEFAULT_GRID_PITCH_MM)
}

/// Projects `base` onto the screen of `spec`, the device showing the grid.
///
/// Screen pixels share the rig plane's origin and axes: pixel (0, 0) is the
/// top-left of device A's face. Landscape swaps the screen dimensions.
pub fn grid_overlay_with_pitch(
    base: &BaseModel,
    spec: &DeviceSpec,
    pitch_mm: f64,
) -> Result<GridOverlay, GuidanceError> {
    if base.layout.stacking != Stacking::DepthStacked {
        return Err(GuidanceError::NotDepthStacked(base.layout.stacking));
    }
    let density = spec.pixel_density;
    if !(density > 0.0) {
        return Err(GuidanceError::NonPositive { name: "pixel density", value: density });
    }
    if !(pitch_mm > 0.0) {
        return Err(GuidanceError::NonPositive { name: "grid pitch", value: pitch_mm });
    }
    let orientation = base.layout.orientation;
    let (sw, sh) = match orientation {
        Orientation::Portrait => (spec.screen_width_px, spec.screen_height_px),
        Orientation::Landscape => (spec.screen_height_px, spec.screen_width_px),
    };
    let origin = base.box_a.top_left();
    let target_exact = SubPixel {
        x: mm_to_px(base.camera_b_target.x - origin.x, density),
        y: mm_to_px(base.camera_b_target.y - origin.y, density),
    };
    let target_marker = target_exact.round();
    let on_screen = |p: Pixel| p.x >= 0 && p.y >= 0 && p.x < i64::from(sw) && p.y < i64::from(sh);
    if !on_screen(target_marker) {
        return Err(GuidanceError::TargetOffScreen { x: target_exact.x, y: target_exact.y, width: sw, height: sh });
    }

    let lines = |limit: u32| {
        let mut out = Vec::new();
        for k in 0u32.. {
            let px = mm_to_px(f64::from(k) * pitch_mm, density).round() as i64;
            if px >= i64::from(limit) {
                break;
            }
            out.push(px);
        }
        out
    };

    let b = base.box_b.translate(-origin.x, -origin.y);
    let x0 = mm_to_px(b.x, density).round() as i64;
    let y0 = mm_to_px(b.y, density).round() as i64;
    let x1 = mm_to_px(b.right(), density).round() as i64;
    let y1 = mm_to_px(b.bottom(), density).round() as i64;
    let (cx0, cy0) = (x0.clamp(0, i64::from(sw)), y0.clamp(0, i64::from(sh)));
    let (cx1, cy1) = (x1.clamp(0, i64::from(sw)), y1.clamp(0, i64::from(sh)));

    Ok(GridOverlay {
        screen_width_px: sw,
        screen_height_px: sh,
        orientation,
        pitch_mm,
        pixel_density: density,
        vertical_lines: lines(sw),
        horizontal_lines: lines(sh),
        target_exact,
        target_marker,
        box_marker: PixelRect { x: cx0, y: cy0, width: cx1 - cx0, height: cy1 - cy0 },
    })
}

impl GridOverlay {
    /// Debug rendering of the overlay in screen pixels.
    pub fn to_svg(&self) -> String {
        let (w, h) = (self.screen_width_px, self.screen_height_px);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#101010\"/>");
        for x in &self.vertical_lines {
            let _ =
                writeln!(out, "<line class=\"grid\" x1=\"{x}\" y1=\"0\" x2=\"{x}\" y2=\"{h}\" stroke=\"#3a3a3a\"/>");
        }
        for y in &self.horizontal_lines {
            let _ =
                writeln!(out, "<line class=\"grid\" x1=\"0\" y1=\"{y}\" x2=\"{w}\" y2=\"{y}\" stroke=\"#3a3a3a\"/>");
        }
        let b = self.box_marker;
        let _ = writeln!(
            out,
            "<rect class=\"box\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#00c050\" stroke-width=\"3\"/>",
            b.x, b.y, b.width, b.height
        );
        let t = self.target_marker;
        let _ = writeln!(
            out,
            "<circle class=\"target\" cx=\"{}\" cy=\"{}\" r=\"12\" fill=\"none\" stroke=\"#ff3030\" stroke-width=\"3\"/>",
            t.x, t.y
        );
        out.push_str("</svg>\n");
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorAxis {
    X,
    Y,
    Z,
}

impl SensorAxis {
    pub const ALL: [SensorAxis; 3] = [SensorAxis::X, SensorAxis::Y, SensorAxis::Z];

    pub fn name(self) -> &'static str {
        match self {
            SensorAxis::X => "x",
            SensorAxis::Y => "y",
            SensorAxis::Z => "z",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    /// Field strength per axis, µT.
    pub magnetometer: [f64; 3],
    /// Angular rate per axis, deg/s.
    pub gyroscope: [f64; 3],
    pub timestamp_ms: f64,
}

impl SensorReading {
    pub fn is_finite(&self) -> bool {
        self.magnetometer.iter().chain(&self.gyroscope).all(|v| v.is_finite()) && self.timestamp_ms.is_finite()
    }
}

/// One entry of a sensor fixture file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadingPair {
    pub a: SensorReading,
    pub b: SensorReading,
}

pub fn parse_readings(text: &str) -> Result<Vec<ReadingPair>, GuidanceError> {
    let pairs: Vec<ReadingPair> = serde_json::from_str(text).map_err(|e| GuidanceError::Readings(e.to_string()))?;
    if let Some(i) = pairs.iter().position(|p| !p.a.is_finite() || !p.b.is_finite()) {
        return Err(GuidanceError::Readings(format!("entry {i} has a non-finite value")));
    }
    Ok(pairs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentStatus {
    pub aligned: bool,
    /// `b − a` of the magnetometer readings after the field transform.
    pub axis_deltas: [f64; 3],
    /// Axes whose delta exceeds the magnetometer tolerance, in x, y, z order.
    pub offending_axes: Vec<SensorAxis>,
    pub tilt_detected: bool,
    pub tilt_axis: Option<SensorAxis>,
}

/// Maps device A's field reading to what device B should read when the two
/// are correctly aligned.
pub trait FieldTransform {
    fn apply(&self, field: [f64; 3]) -> [f64; 3];
}

/// Aligned phones face the same way, so they should read the same field.
/// A rotation into an earth-fixed frame would plug in here.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityTransform;

impl FieldTransform for IdentityTransform {
    fn apply(&self, field: [f64; 3]) -> [f64; 3] {
        field
    }
}

pub fn check_alignment(
    a: &SensorReading,
    b: &SensorReading,
    mag_tolerance: f64,
    gyro_tolerance: f64,
) -> AlignmentStatus {
    check_alignment_with(&IdentityTransform, a, b, mag_tolerance, gyro_tolerance)
}

pub fn check_alignment_with(
    transform: &dyn FieldTransform,
    a: &SensorReading,
    b: &SensorReading,
    mag_tolerance: f64,
    gyro_tolerance: f64,
) -> AlignmentStatus {
    let expected = transform.apply(a.magnetometer);
    let axis_deltas = [0, 1, 2].map(|i| b.magnetometer[i] - expected[i]);
    let offending_axes: Vec<SensorAxis> =
        SensorAxis::ALL.into_iter().filter(|ax| !(axis_deltas[*ax as usize].abs() <= mag_tolerance)).collect();
    // A phone is tilting when it rotates on an axis and its partner is not
    // rotating along with it.
    let tilt_axis = SensorAxis::ALL.into_iter().find(|ax| {
        let (ga, gb) = (a.gyroscope[*ax as usize], b.gyroscope[*ax as usize]);
        let moving = !(ga.abs() <= gyro_tolerance) || !(gb.abs() <= gyro_tolerance);
        moving && !((ga - gb).abs() <= gyro_tolerance)
    });
    AlignmentStatus {
        aligned: offending_axes.is_empty() && tilt_axis.is_none(),
        axis_deltas,
        offending_axes,
        tilt_detected: tilt_axis.is_some(),
        tilt_axis,
    }
}

/// Spoken-style correction steps for `status`.
pub fn instructions(status: &AlignmentStatus) -> Vec<String> {
    if status.aligned {
        return vec!["aligned".to_string()];
    }
    let mut out: Vec<String> = status
        .offending_axes
        .iter()
        .map(|ax| {
            let sign = if status.axis_deltas[*ax as usize] > 0.0 { '-' } else { '+' };
            format!("move second device {sign}{}", ax.name())
        })
        .collect();
    if let Some(ax) = status.tilt_axis {
        out.push(format!("reduce tilt about {}", ax.name()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{compute_base_model, Axis, LayoutConfig};
    use crate::geometry::Point2;
    use crate::testing::j7;

    fn stacked() -> BaseModel {
        compute_base_model(&j7(), &j7(), LayoutConfig::new(Axis::Vertical, Stacking::DepthStacked)).unwrap()
    }

    fn reading(mag: [f64; 3], gyro: [f64; 3]) -> SensorReading {
        SensorReading { magnetometer: mag, gyroscope: gyro, timestamp_ms: 0.0 }
    }

    #[test]
    fn ten_px_per_mm_marker() {
        let mut spec = j7();
        spec.pixel_density = 10.0;
        spec.screen_width_px = 780;
        let mut base = stacked();
        base.camera_b_target = Point2::new(39.0, 8.0);
        let g = grid_overlay(&base, &spec).unwrap();
        assert_eq!(g.target_marker, Pixel { x: 390, y: 80 });
        assert_eq!(g.vertical_lines, (0..8).map(|k| k * 100).collect::<Vec<_>>());
    }

    #[test]
    fn coplanar_base_is_refused() {
        let base = compute_base_model(
            &j7(),
            &j7(),
            LayoutConfig::new(Axis::Vertical, Stacking::Coplanar).with_rotation(crate::geometry::Rotation::R180),
        )
        .unwrap();
        assert!(matches!(grid_overlay(&base, &j7()), Err(GuidanceError::NotDepthStacked(_))));
    }

    #[test]
    fn off_screen_target_is_an_error() {
        let mut base = stacked();
        base.camera_b_target = Point2::new(500.0, 10.0);
        assert!(matches!(grid_overlay(&base, &j7()), Err(GuidanceError::TargetOffScreen { .. })));
    }

    #[test]
    fn landscape_swaps_screen() {
        let layout =
            LayoutConfig::new(Axis::Horizontal, Stacking::DepthStacked).with_orientation(Orientation::Landscape);
        let base = compute_base_model(&j7(), &j7(), layout).unwrap();
        let g = grid_overlay(&base, &j7()).unwrap();
        assert_eq!((g.screen_width_px, g.screen_height_px), (1280, 720));
    }

    #[test]
    fn box_marker_stays_on_screen() {
        let g = grid_overlay(&stacked(), &j7()).unwrap();
        let b = g.box_marker;
        assert!(b.x >= 0 && b.y >= 0);
        assert!(b.x + b.width <= i64::from(g.screen_width_px));
        assert!(b.y + b.height <= i64::from(g.screen_height_px));
        assert!(g.to_svg().contains("class=\"target\""));
    }

    #[test]
    fn identical_readings_align() {
        let r = reading([20.0, -5.0, 40.0], [0.1, 0.0, 0.0]);
        let s = check_alignment(&r, &r, 5.0, 2.0);
        assert!(s.aligned);
        assert_eq!(s.axis_deltas, [0.0; 3]);
        assert_eq!(instructions(&s), ["aligned"]);
    }

    #[test]
    fn z_delta_is_reported() {
        let a = reading([0.0; 3], [0.0; 3]);
        let b = reading([0.0, 0.0, 12.0], [0.0; 3]);
        let s = check_alignment(&a, &b, 5.0, 2.0);
        assert!(!s.aligned);
        assert_eq!(s.offending_axes, [SensorAxis::Z]);
        assert_eq!(instructions(&s), ["move second device -z"]);
    }

    #[test]
    fn gyro_tilt_on_y() {
        let a = reading([0.0; 3], [0.0; 3]);
        let b = reading([0.0; 3], [0.0, 9.0, 0.0]);
        let s = check_alignment(&a, &b, 5.0, 2.0);
        assert!(s.tilt_detected);
        assert_eq!(s.tilt_axis, Some(SensorAxis::Y));
        assert_eq!(instructions(&s), ["reduce tilt about y"]);
    }

    #[test]
    fn common_rotation_is_not_tilt() {
        let a = reading([0.0; 3], [0.0, 9.0, 0.0]);
        let b = reading([0.0; 3], [0.0, 9.5, 0.0]);
        assert!(!check_alignment(&a, &b, 5.0, 2.0).tilt_detected);
    }

    #[test]
    fn two_axes_plus_tilt_gives_three_steps() {
        let a = reading([0.0; 3], [0.0; 3]);
        let b = reading([-8.0, 0.0, 12.0], [0.0, 0.0, 5.0]);
        let s = check_alignment(&a, &b, 5.0, 2.0);
        assert_eq!(instructions(&s), ["move second device +x", "move second device -z", "reduce tilt about z"]);
    }

    #[test]
    fn non_finite_fixture_rejected() {
        let ok = r#"[{"a":{"magnetometer":[0,0,0],"gyroscope":[0,0,0],"timestamp_ms":0},
                      "b":{"magnetometer":[0,0,1],"gyroscope":[0,0,0],"timestamp_ms":0}}]"#;
        assert_eq!(parse_readings(ok).unwrap().len(), 1);
        assert!(parse_readings("[{\"a\": 1}]").is_err());
    }
}
