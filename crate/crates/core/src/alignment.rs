//! Base-model solver: places device B relative to device A so that the two
//! back cameras sit exactly one inter-pupillary distance apart.
//!
//! Device A is fixed with its (oriented) back-face footprint at the origin.
//! Device B is rotated, aligned so both cameras lie on a line parallel to the
//! layout axis, and translated along that axis. Along the axis the camera
//! separation is `|c - t|` for a translation `t`, so the two candidate
//! placements are `t = c ± ipd`; the overlap (coplanar) or occlusion
//! (depth-stacked) constraint forbids one open interval of `t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{round_mm, Point2, Rect, Rotation, GEOMETRY_TOLERANCE_MM};
use crate::registry::{DeviceSpec, SpecViolation};

/// Target camera separation in millimeters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ipd(f64);

impl Ipd {
    pub const DEFAULT_MM: f64 = 65.0;

    pub fn new(mm: f64) -> Result<Self, AlignmentError> {
        if mm > 0.0 && mm.is_finite() {
            Ok(Ipd(mm))
        } else {
            Err(AlignmentError::InvalidIpd(mm))
        }
    }

    pub fn mm(self) -> f64 {
        self.0
    }
}

impl Default for Ipd {
    fn default() -> Self {
        Ipd(Self::DEFAULT_MM)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stacking {
    /// Both phones lie side by side in one plane; bodies may not overlap.
    Coplanar,
    /// Device B sits in front of or behind device A; B may not cover A's camera.
    DepthStacked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    #[default]
    Portrait,
    Landscape,
}

impl Orientation {
    pub fn rotation(self) -> Rotation {
        match self {
            Orientation::Portrait => Rotation::R0,
            Orientation::Landscape => Rotation::R90,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub axis: Axis,
    pub stacking: Stacking,
    pub orientation: Orientation,
    /// Rotation of device B to fall back on when it cannot reach the target
    /// separation unrotated.
    pub rotation_b: Rotation,
}

impl LayoutConfig {
    pub fn new(axis: Axis, stacking: Stacking) -> Self {
        Self { axis, stacking, orientation: Orientation::Portrait, rotation_b: Rotation::R0 }
    }

    pub fn with_rotation(mut self, rotation_b: Rotation) -> Self {
        self.rotation_b = rotation_b;
        self
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }
}

/// Solved placement of the second device, in rig-plane millimeters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    pub device_a: String,
    pub device_b: String,
    pub ipd: f64,
    pub layout: LayoutConfig,
    /// Rotation of B relative to A that was actually used.
    pub rotation_applied: Rotation,
    pub camera_a: Point2,
    pub camera_b_target: Point2,
    /// B's camera position relative to `box_b`'s top-left corner.
    pub camera_b_offset: Point2,
    pub box_a: Rect,
    pub box_b: Rect,
    /// Signed clearance between the bodies along the layout axis; negative
    /// when they overlap in projection.
    pub gap: f64,
}

impl BaseModel {
    pub fn rig_bounds(&self) -> Rect {
        self.box_a.union(&self.box_b)
    }

    /// Copy with every length rounded to 0.001 mm.
    pub fn rounded(&self) -> BaseModel {
        let p = |p: Point2| Point2::new(round_mm(p.x), round_mm(p.y));
        let r = |r: Rect| Rect::new(round_mm(r.x), round_mm(r.y), round_mm(r.width), round_mm(r.height));
        BaseModel {
            ipd: round_mm(self.ipd),
            camera_a: p(self.camera_a),
            camera_b_target: p(self.camera_b_target),
            camera_b_offset: p(self.camera_b_offset),
            box_a: r(self.box_a),
            box_b: r(self.box_b),
            gap: round_mm(self.gap),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rounded()).expect("base model serializes")
    }

    pub fn from_json(text: &str) -> Result<BaseModel, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AlignmentError {
    #[error("inter-pupillary distance must be positive, got {0}")]
    InvalidIpd(f64),
    #[error("device `{model_id}`: {violation}")]
    InvalidSpec { model_id: String, violation: SpecViolation },
    #[error("infeasible layout: minimum achievable camera separation is {min_separation:.1} mm, target {ipd:.1} mm")]
    Infeasible { min_separation: f64, ipd: f64 },
}

/// Device footprint after orientation and rotation, anchored at (0, 0).
#[derive(Clone, Copy, Debug)]
struct Footprint {
    width: f64,
    length: f64,
    camera: Point2,
}

impl Footprint {
    fn of(spec: &DeviceSpec, rotation: Rotation) -> Self {
        let (width, length) = rotation.footprint(spec.body_width, spec.body_length);
        let camera = rotation.apply(spec.camera_center, spec.body_width, spec.body_length);
        Footprint { width, length, camera }
    }
}

/// Coordinates split into the layout axis and the perpendicular.
fn along(axis: Axis, p: Point2) -> (f64, f64) {
    match axis {
        Axis::Horizontal => (p.x, p.y),
        Axis::Vertical => (p.y, p.x),
    }
}

fn unsplit(axis: Axis, along: f64, perp: f64) -> Point2 {
    match axis {
        Axis::Horizontal => Point2::new(along, perp),
        Axis::Vertical => Point2::new(perp, along),
    }
}

fn extents(axis: Axis, f: &Footprint) -> (f64, f64) {
    match axis {
        Axis::Horizontal => (f.width, f.length),
        Axis::Vertical => (f.length, f.width),
    }
}

struct Candidate {
    translation: f64,
    area: f64,
    gap: f64,
}

enum Solve {
    Feasible(BaseModel),
    Infeasible { min_separation: f64 },
}

fn solve_with_rotation(a: &DeviceSpec, b: &DeviceSpec, layout: LayoutConfig, ipd: f64, rotation: Rotation) -> Solve {
    let rot_a = layout.orientation.rotation();
    let fa = Footprint::of(a, rot_a);
    let fb = Footprint::of(b, rot_a.then(rotation));
    let axis = layout.axis;

    let (len_a, perp_len_a) = extents(axis, &fa);
    let (len_b, perp_len_b) = extents(axis, &fb);
    let (cam_a_along, cam_a_perp) = along(axis, fa.camera);
    let (cam_b_along, cam_b_perp) = along(axis, fb.camera);

    // Perpendicular offset of box B that puts both cameras on one axis line.
    let perp_b = cam_a_perp - cam_b_perp;
    // For translation t of box B, separation = |c - t|.
    let c = cam_a_along - cam_b_along;

    let forbidden = match layout.stacking {
        Stacking::Coplanar => {
            let perp_overlap = perp_len_a.min(perp_b + perp_len_b) - perp_b.max(0.0);
            (perp_overlap > 0.0).then_some((-len_b, len_a))
        }
        Stacking::DepthStacked => {
            // Camera A shares B's camera perpendicular coordinate; it is
            // covered iff it is strictly inside B's perpendicular extent.
            (cam_b_perp > 0.0 && cam_b_perp < perp_len_b).then_some((cam_a_along - len_b, cam_a_along))
        }
    };
    let allowed = |t: f64| match forbidden {
        Some((lo, hi)) => !(t > lo && t < hi),
        None => true,
    };

    let mut best: Option<Candidate> = None;
    // Positive direction first so that exact ties resolve deterministically.
    for t in [c + ipd, c - ipd] {
        if !allowed(t) {
            continue;
        }
        let box_b_along = Rect::new(t, perp_b, len_b, perp_len_b);
        let area = Rect::new(0.0, 0.0, len_a, perp_len_a).union(&box_b_along).area();
        let gap = (t - len_a).max(-t - len_b);
        let better = match &best {
            None => true,
            Some(cur) => area < cur.area || (area == cur.area && gap < cur.gap),
        };
        if better {
            best = Some(Candidate { translation: t, area, gap });
        }
    }

    let Some(best) = best else {
        let min_separation = match forbidden {
            Some((lo, hi)) if c > lo && c < hi => (c - lo).min(hi - c),
            _ => 0.0,
        };
        return Solve::Infeasible { min_separation };
    };

    let origin_b = unsplit(axis, best.translation, perp_b);
    let box_b = Rect::new(origin_b.x, origin_b.y, fb.width, fb.length);
    let camera_b_target = origin_b + fb.camera;
    Solve::Feasible(BaseModel {
        device_a: a.model_id.clone(),
        device_b: b.model_id.clone(),
        ipd,
        layout,
        rotation_applied: rotation,
        camera_a: fa.camera,
        camera_b_target,
        camera_b_offset: fb.camera,
        box_a: Rect::new(0.0, 0.0, fa.width, fa.length),
        box_b,
        gap: best.gap,
    })
}

/// Solves the placement with the default 65 mm separation.
pub fn compute_base_model(a: &DeviceSpec, b: &DeviceSpec, layout: LayoutConfig) -> Result<BaseModel, AlignmentError> {
    compute_base_model_with_ipd(a, b, layout, Ipd::default())
}

/// Solves the placement of `b` next to `a`. B is tried unrotated first and
/// then with `layout.rotation_b`; the first rotation that admits a placement
/// wins, and within it the smaller rig bounding box (then the smaller gap).
pub fn compute_base_model_with_ipd(
    a: &DeviceSpec,
    b: &DeviceSpec,
    layout: LayoutConfig,
    ipd: Ipd,
) -> Result<BaseModel, AlignmentError> {
    for spec in [a, b] {
        spec.validate()
            .map_err(|violation| AlignmentError::InvalidSpec { model_id: spec.model_id.clone(), violation })?;
    }
    let mut rotations = vec![Rotation::R0];
    if layout.rotation_b != Rotation::R0 {
        rotations.push(layout.rotation_b);
    }
    let mut min_separation = f64::INFINITY;
    for rotation in rotations {
        match solve_with_rotation(a, b, layout, ipd.mm(), rotation) {
            Solve::Feasible(model) => return Ok(model),
            Solve::Infeasible { min_separation: s } => min_separation = min_separation.min(s),
        }
    }
    Err(AlignmentError::Infeasible { min_separation, ipd: ipd.mm() })
}

/// Solves the same layout for portrait and landscape device orientation.
pub fn compute_both_orientations(
    a: &DeviceSpec,
    b: &DeviceSpec,
    layout: LayoutConfig,
    ipd: Ipd,
) -> [Result<BaseModel, AlignmentError>; 2] {
    [Orientation::Portrait, Orientation::Landscape]
        .map(|o| compute_base_model_with_ipd(a, b, layout.with_orientation(o), ipd))
}

pub fn camera_separation(model: &BaseModel) -> f64 {
    model.camera_a.distance(model.camera_b_target)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Camera separation differs from the model's ipd.
    Ipd { measured: f64, expected: f64 },
    /// `camera_b_target` is not at the recorded offset inside `box_b`.
    CameraOffset { measured: Point2, expected: Point2 },
    /// Coplanar bodies overlap; extents of the intersection.
    Overlap { overlap_x: f64, overlap_y: f64 },
    /// Device B covers camera A; depth of camera A inside `box_b`.
    Occlusion { depth: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Ipd { measured, expected } => write!(f, "ipd: {measured:.1} ≠ {expected:.1}"),
            Violation::CameraOffset { measured, expected } => write!(
                f,
                "camera offset: ({:.3}, {:.3}) ≠ ({:.3}, {:.3})",
                measured.x, measured.y, expected.x, expected.y
            ),
            Violation::Overlap { overlap_x, overlap_y } => {
                write!(f, "overlap: bodies intersect by {overlap_x:.3} x {overlap_y:.3} mm")
            }
            Violation::Occlusion { depth } => write!(f, "occlusion: camera A is {depth:.3} mm inside box B"),
        }
    }
}

/// Independent check of every base-model invariant.
pub fn validate_placement(model: &BaseModel, tolerance: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let sep = camera_separation(model);
    if (sep - model.ipd).abs() > tolerance {
        out.push(Violation::Ipd { measured: sep, expected: model.ipd });
    }
    let measured = model.camera_b_target - model.box_b.top_left();
    if measured.distance(model.camera_b_offset) > tolerance {
        out.push(Violation::CameraOffset { measured, expected: model.camera_b_offset });
    }
    match model.layout.stacking {
        Stacking::Coplanar => {
            let (ox, oy) = model.box_a.overlap_extents(&model.box_b);
            if ox > tolerance && oy > tolerance {
                out.push(Violation::Overlap { overlap_x: ox, overlap_y: oy });
            }
        }
        Stacking::DepthStacked => {
            let depth = model.box_b.interior_depth(model.camera_a);
            if depth > tolerance {
                out.push(Violation::Occlusion { depth });
            }
        }
    }
    out
}

/// Convenience wrapper at the standard geometric tolerance.
pub fn is_valid(model: &BaseModel) -> bool {
    validate_placement(model, GEOMETRY_TOLERANCE_MM).is_empty()
}
