//! Single-phone periscope mount with two 45° mirrors.
//!
//! The phone lies on a base plate. The near mirror stands over the camera
//! and turns the optical axis 90° into the plate plane; the far mirror sits
//! one inter-pupillary distance further along and turns it back. The near
//! mirror is the blue, double-sided one (left-eye feed); the far mirror is
//! the red, single-sided one (right-eye feed).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{
    check_positive, fmt_param, rect_polyline, Piece, PieceKind, RigKind, Shape, TemplateError, TemplateLayout,
    BASE_PANEL,
};
use crate::alignment::Ipd;
use crate::geometry::{Point2, Rect};
use crate::registry::DeviceSpec;

pub const MIRROR_TILT_DEG: f64 = 45.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MirrorSide {
    Single,
    Double,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorRig {
    /// Over the camera: blue, double-sided.
    pub mirror_a_center: Point2,
    /// One ipd away: red, single-sided.
    pub mirror_b_center: Point2,
    pub tilt_deg: f64,
    pub separation: f64,
    pub color_a: String,
    pub sides_a: MirrorSide,
    pub color_b: String,
    pub sides_b: MirrorSide,
}

impl MirrorRig {
    /// Unit normals of the two mirrors, tilted about the y axis.
    pub fn normals(&self) -> [Vector3<f64>; 2] {
        let t = self.tilt_deg.to_radians();
        let dir = (self.mirror_b_center.x - self.mirror_a_center.x).signum();
        let n = Vector3::new(-dir * t.sin(), 0.0, t.cos());
        [n, n]
    }

    /// Direction of the camera's optical axis after each mirror, starting
    /// out of the plate along +z.
    pub fn optical_path(&self) -> [Vector3<f64>; 3] {
        let [na, nb] = self.normals();
        let d0 = Vector3::new(0.0, 0.0, 1.0);
        let d1 = reflect(d0, na);
        let d2 = reflect(d1, nb);
        [d0, d1, d2]
    }
}

/// Mirror reflection of direction `d` about a plane with normal `n`.
pub fn reflect(d: Vector3<f64>, n: Vector3<f64>) -> Vector3<f64> {
    let n = n.normalize();
    d - 2.0 * d.dot(&n) * n
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorOptions {
    pub ipd: Ipd,
    /// Mirror edge length inserted into each slot.
    pub mirror_width: f64,
    pub slot_thickness: f64,
    pub aperture_radius: f64,
    /// Optional rounding of the phone cradle corners.
    pub fillet_radius: f64,
    pub margin: f64,
}

impl Default for MirrorOptions {
    fn default() -> Self {
        Self {
            ipd: Ipd::default(),
            mirror_width: 30.0,
            slot_thickness: 3.0,
            aperture_radius: 5.0,
            fillet_radius: 0.0,
            margin: 10.0,
        }
    }
}

/// Mirror placement in cradle coordinates (cradle top-left at the origin).
pub fn mirror_rig(spec: &DeviceSpec, ipd: Ipd) -> MirrorRig {
    let near = spec.camera_center;
    // Head toward the nearer long edge so the far mirror clears the phone.
    let dir = if near.x >= spec.body_width / 2.0 { 1.0 } else { -1.0 };
    MirrorRig {
        mirror_a_center: near,
        mirror_b_center: near.offset(dir * ipd.mm(), 0.0),
        tilt_deg: MIRROR_TILT_DEG,
        separation: ipd.mm(),
        color_a: "blue".into(),
        sides_a: MirrorSide::Double,
        color_b: "red".into(),
        sides_b: MirrorSide::Single,
    }
}

pub fn mirror_rig_layout(spec: &DeviceSpec) -> Result<TemplateLayout, TemplateError> {
    mirror_rig_layout_with(spec, &MirrorOptions::default())
}

pub fn mirror_rig_layout_with(spec: &DeviceSpec, opts: &MirrorOptions) -> Result<TemplateLayout, TemplateError> {
    spec.validate().map_err(|violation| TemplateError::InvalidSpec { model_id: spec.model_id.clone(), violation })?;
    check_positive("mirror width", opts.mirror_width)?;
    check_positive("slot thickness", opts.slot_thickness)?;
    check_positive("aperture radius", opts.aperture_radius)?;
    if !(opts.fillet_radius >= 0.0) {
        return Err(TemplateError::NonPositive { name: "fillet radius", value: opts.fillet_radius });
    }
    let rig = mirror_rig(spec, opts.ipd);
    let cradle = Rect::new(0.0, 0.0, spec.body_width, spec.body_length);
    let slot = |c: Point2| {
        Rect::new(
            c.x - opts.slot_thickness / 2.0,
            c.y - opts.mirror_width / 2.0,
            opts.slot_thickness,
            opts.mirror_width,
        )
    };
    let slot_a = slot(rig.mirror_a_center);
    let slot_b = slot(rig.mirror_b_center);
    let aperture = Rect::new(
        rig.mirror_a_center.x - opts.aperture_radius,
        rig.mirror_a_center.y - opts.aperture_radius,
        2.0 * opts.aperture_radius,
        2.0 * opts.aperture_radius,
    );
    let plate = cradle.union(&slot_a).union(&slot_b).union(&aperture).expand(opts.margin);

    let mut layout = TemplateLayout::new(RigKind::Mirror);
    layout.pieces.push(Piece::new("base-plate", PieceKind::Cut, BASE_PANEL, rect_polyline(plate)));
    layout.pieces.push(Piece::new(
        "cradle-outline",
        PieceKind::Fold,
        BASE_PANEL,
        Shape::Polyline { points: rounded_rect(cradle, opts.fillet_radius), closed: true },
    ));
    layout.pieces.push(Piece::new("slot-blue", PieceKind::Cut, BASE_PANEL, rect_polyline(slot_a)));
    layout.pieces.push(Piece::new("slot-red", PieceKind::Cut, BASE_PANEL, rect_polyline(slot_b)));
    layout.pieces.push(Piece::new(
        "aperture-camera",
        PieceKind::Aperture,
        BASE_PANEL,
        Shape::Circle { center: rig.mirror_a_center, radius: opts.aperture_radius },
    ));

    let offset = layout.fit_to_sheet(opts.margin);
    let m = &mut layout.metadata;
    m.insert("rig".into(), RigKind::Mirror.as_str().into());
    m.insert("device".into(), spec.model_id.clone());
    m.insert("ipd_mm".into(), fmt_param(rig.separation));
    m.insert("tilt_deg".into(), fmt_param(rig.tilt_deg));
    m.insert("slot-blue".into(), format!("{} {}-sided, near, left eye", rig.color_a, "double"));
    m.insert("slot-red".into(), format!("{} {}-sided, far, right eye", rig.color_b, "single"));
    m.insert("fillet_radius_mm".into(), fmt_param(opts.fillet_radius));
    m.insert("cradle_to_sheet_mm".into(), format!("{},{}", fmt_param(offset.x), fmt_param(offset.y)));
    layout.check_bounds()?;
    Ok(layout)
}

/// Rectangle outline with each corner replaced by an 8-segment arc.
fn rounded_rect(r: Rect, radius: f64) -> Vec<Point2> {
    let radius = radius.min(r.width / 2.0).min(r.height / 2.0);
    if radius <= 0.0 {
        return r.corners().to_vec();
    }
    const STEPS: usize = 8;
    // Arc centers and start angles, clockwise from the top-left corner (y down).
    let centers = [
        (Point2::new(r.x + radius, r.y + radius), 180.0),
        (Point2::new(r.right() - radius, r.y + radius), 270.0),
        (Point2::new(r.right() - radius, r.bottom() - radius), 0.0),
        (Point2::new(r.x + radius, r.bottom() - radius), 90.0),
    ];
    let mut pts = Vec::with_capacity(4 * (STEPS + 1));
    for (c, start) in centers {
        for i in 0..=STEPS {
            let a = f64::to_radians(start + 90.0 * i as f64 / STEPS as f64);
            pts.push(Point2::new(c.x + radius * a.cos(), c.y + radius * a.sin()));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::j7;

    #[test]
    fn slots_are_one_ipd_apart_at_45_degrees() {
        let rig = mirror_rig(&j7(), Ipd::default());
        assert_eq!(rig.mirror_a_center.distance(rig.mirror_b_center), 65.0);
        assert_eq!(rig.tilt_deg, 45.0);
        assert_eq!((rig.color_a.as_str(), rig.sides_a), ("blue", MirrorSide::Double));
        assert_eq!((rig.color_b.as_str(), rig.sides_b), ("red", MirrorSide::Single));
    }

    #[test]
    fn each_mirror_turns_the_axis_ninety_degrees() {
        let rig = mirror_rig(&j7(), Ipd::default());
        let [d0, d1, d2] = rig.optical_path();
        assert!(d0.dot(&d1).abs() < 1e-12);
        assert!(d1.dot(&d2).abs() < 1e-12);
        // Periscope: the view leaves parallel to where it entered.
        assert!((d2 - d0).norm() < 1e-12);
        // First leg heads toward the far mirror.
        assert!(d1.x > 0.999);
    }

    #[test]
    fn near_slot_sits_on_camera() {
        let layout = mirror_rig_layout(&j7()).unwrap();
        let offset: Vec<f64> = layout.metadata["cradle_to_sheet_mm"].split(',').map(|v| v.parse().unwrap()).collect();
        let slot = layout.piece("slot-blue").unwrap().shape.bounds().center();
        // Hand computation: camera (39, 10) in the cradle frame.
        assert!((slot.x - (39.0 + offset[0])).abs() < 1e-9);
        assert!((slot.y - (10.0 + offset[1])).abs() < 1e-9);
        let far = layout.piece("slot-red").unwrap().shape.bounds().center();
        assert!((far.distance(slot) - 65.0).abs() < 1e-9);
    }

    #[test]
    fn fillet_rounds_cradle_corners() {
        let opts = MirrorOptions { fillet_radius: 6.0, ..MirrorOptions::default() };
        let layout = mirror_rig_layout_with(&j7(), &opts).unwrap();
        let Shape::Polyline { points, .. } = &layout.piece("cradle-outline").unwrap().shape else { panic!() };
        assert_eq!(points.len(), 36);
        let sharp = mirror_rig_layout(&j7()).unwrap();
        let Shape::Polyline { points, .. } = &sharp.piece("cradle-outline").unwrap().shape else { panic!() };
        assert_eq!(points.len(), 4);
    }

    #[test]
    fn camera_left_of_center_mirrors_to_the_left() {
        let mut spec = j7();
        spec.camera_center.x = 14.0;
        let rig = mirror_rig(&spec, Ipd::default());
        assert_eq!(rig.mirror_b_center.x, 14.0 - 65.0);
        let [_, d1, _] = rig.optical_path();
        assert!(d1.x < -0.999);
    }
}
