//! Unfolded strip for three phones mounted on the faces of a triangular
//! prism, one camera per face.
//!
//! Each phone sits flush with the leading fold of its panel, so every camera
//! is `u = camera_center.x` along its face. On an equilateral cross-section
//! of side `P`, consecutive cameras are then `sqrt(P² − 3Pu + 3u²)` apart,
//! which fixes `P` for a target separation `D`:
//! `P = (3u + sqrt(4D² − 3u²)) / 2`.

use super::{
    check_positive, fmt_param, rect_polyline, Fold, Piece, PieceKind, RigKind, Shape, TemplateError, TemplateLayout,
};
use crate::alignment::Ipd;
use crate::geometry::{Point2, Rect};
use crate::registry::DeviceSpec;

/// Exterior turn between neighbouring faces of an equilateral prism.
const FACE_TURN_DEG: f64 = 120.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreePhoneOptions {
    pub ipd: Ipd,
    pub aperture_radius: f64,
    pub margin: f64,
}

impl Default for ThreePhoneOptions {
    fn default() -> Self {
        Self { ipd: Ipd::default(), aperture_radius: 5.0, margin: 10.0 }
    }
}

/// Face width `P` that puts cameras at in-face offset `u` exactly `separation`
/// apart, or `None` when no real solution exists.
pub fn triangle_panel_width(separation: f64, u: f64) -> Option<f64> {
    let disc = 4.0 * separation * separation - 3.0 * u * u;
    if disc < 0.0 {
        return None;
    }
    Some((3.0 * u + disc.sqrt()) / 2.0)
}

pub fn three_phone_layout(spec: &DeviceSpec) -> Result<TemplateLayout, TemplateError> {
    three_phone_layout_with(spec, &ThreePhoneOptions::default())
}

pub fn three_phone_layout_with(spec: &DeviceSpec, opts: &ThreePhoneOptions) -> Result<TemplateLayout, TemplateError> {
    check_positive("aperture radius", opts.aperture_radius)?;
    spec.validate().map_err(|violation| TemplateError::InvalidSpec { model_id: spec.model_id.clone(), violation })?;
    let d = opts.ipd.mm();
    let u = spec.camera_center.x;
    let panel = triangle_panel_width(d, u).ok_or_else(|| {
        TemplateError::TriangleInfeasible(format!(
            "camera offset {u} mm exceeds {:.3} mm, the largest offset that admits a {d} mm spacing",
            2.0 * d / 3f64.sqrt()
        ))
    })?;
    if panel <= 0.0 || panel < spec.body_width {
        return Err(TemplateError::TriangleInfeasible(format!(
            "face width would be {panel:.3} mm, narrower than the {} mm phone",
            spec.body_width
        )));
    }
    let height = spec.body_length;

    let mut layout = TemplateLayout::new(RigKind::ThreePhone);
    layout.pieces.push(Piece::new(
        "strip-outline",
        PieceKind::Cut,
        "panel0",
        rect_polyline(Rect::new(0.0, 0.0, 3.0 * panel, height)),
    ));
    for k in 1..3 {
        let x = k as f64 * panel;
        let (start, end) = (Point2::new(x, 0.0), Point2::new(x, height));
        layout.pieces.push(Piece::new(
            format!("fold{k}"),
            PieceKind::Fold,
            format!("panel{}", k - 1),
            Shape::Polyline { points: vec![start, end], closed: false },
        ));
        layout.folds.push(Fold {
            panel: format!("panel{k}"),
            parent: format!("panel{}", k - 1),
            hinge_start: start,
            hinge_end: end,
            angle_deg: FACE_TURN_DEG,
        });
    }
    for k in 0..3 {
        let center = Point2::new(k as f64 * panel + u, spec.camera_center.y);
        layout.pieces.push(Piece::new(
            format!("aperture-{k}"),
            PieceKind::Aperture,
            format!("panel{k}"),
            Shape::Circle { center, radius: opts.aperture_radius },
        ));
    }

    let offset = layout.fit_to_sheet(opts.margin);
    let m = &mut layout.metadata;
    m.insert("rig".into(), RigKind::ThreePhone.as_str().into());
    m.insert("device".into(), spec.model_id.clone());
    m.insert("ipd_mm".into(), fmt_param(d));
    m.insert("panel_width_mm".into(), fmt_param(panel));
    m.insert("strip_length_mm".into(), fmt_param(3.0 * panel));
    m.insert("camera_offset_mm".into(), fmt_param(u));
    m.insert("aperture_radius_mm".into(), fmt_param(opts.aperture_radius));
    m.insert("closing_seam".into(), format!("x={} joins x={}", fmt_param(offset.x + 3.0 * panel), fmt_param(offset.x)));
    layout.check_bounds()?;
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::j7;

    #[test]
    fn j7_triangle_is_equilateral_at_65() {
        let layout = three_phone_layout(&j7()).unwrap();
        let d = layout.assembled_aperture_distances().unwrap();
        assert_eq!(d.len(), 3);
        for v in d {
            assert!((v - 65.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn strip_is_three_panels_long() {
        let layout = three_phone_layout(&j7()).unwrap();
        let panel: f64 = layout.metadata["panel_width_mm"].parse().unwrap();
        let strip = layout.piece("strip-outline").unwrap().shape.bounds();
        assert_eq!(strip.width, 3.0 * panel);
    }

    #[test]
    fn folding_closes_the_prism() {
        let layout = three_phone_layout(&j7()).unwrap();
        let strip = layout.piece("strip-outline").unwrap().shape.bounds();
        let start = layout.assemble_point("panel0", strip.top_left()).unwrap();
        let end = layout.assemble_point("panel2", Point2::new(strip.right(), strip.y)).unwrap();
        assert!((start - end).norm() < 1e-9);
    }

    #[test]
    fn offset_too_large_is_infeasible() {
        let mut spec = j7();
        spec.body_width = 160.0;
        spec.camera_center.x = 80.0;
        assert!(matches!(three_phone_layout(&spec), Err(TemplateError::TriangleInfeasible(_))));
    }

    #[test]
    fn wide_phone_does_not_fit_face() {
        let mut spec = j7();
        spec.body_width = 130.0;
        spec.camera_center.x = 5.0;
        assert!(matches!(three_phone_layout(&spec), Err(TemplateError::TriangleInfeasible(_))));
    }

    #[test]
    fn zero_offset_puts_cameras_on_prism_edges() {
        assert_eq!(triangle_panel_width(65.0, 0.0), Some(65.0));
    }
}
