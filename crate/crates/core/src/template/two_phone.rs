//! Cardboard holder for two identical phones held in one plane.
//!
//! The back panel covers the rig bounding box of the base model. Five straps
//! hang off the two long sides of the panel at even spacing (1/6 … 5/6 of the
//! panel length): odd straps on the low side, even straps on the high side.

use super::{
    check_positive, fmt_param, strap_lengths_for_span, Fold, Piece, PieceKind, RigKind, Shape, StrapSet, TemplateError,
    TemplateLayout, BASE_PANEL, DEFAULT_CARDBOARD_MM, DEFAULT_VELCRO_MM,
};
use crate::alignment::{validate_placement, Axis, BaseModel, Stacking};
use crate::geometry::{Point2, Rect, GEOMETRY_TOLERANCE_MM};
use crate::registry::DeviceSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPhoneOptions {
    pub velcro: f64,
    pub cardboard: f64,
    pub strap_width: f64,
    pub aperture_radius: f64,
    pub margin: f64,
}

impl Default for TwoPhoneOptions {
    fn default() -> Self {
        Self {
            velcro: DEFAULT_VELCRO_MM,
            cardboard: DEFAULT_CARDBOARD_MM,
            strap_width: 20.0,
            aperture_radius: 5.0,
            margin: 10.0,
        }
    }
}

pub fn two_phone_layout(
    spec: &DeviceSpec,
    base: &BaseModel,
    velcro: f64,
    cardboard: f64,
) -> Result<TemplateLayout, TemplateError> {
    two_phone_layout_with(spec, base, &TwoPhoneOptions { velcro, cardboard, ..TwoPhoneOptions::default() })
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Low,
    High,
}

struct Strap {
    number: u8,
    side: Side,
    center: f64,
    width: f64,
    length: f64,
    creases: Vec<f64>,
    reverse_last: bool,
}

pub fn two_phone_layout_with(
    spec: &DeviceSpec,
    base: &BaseModel,
    opts: &TwoPhoneOptions,
) -> Result<TemplateLayout, TemplateError> {
    check_positive("strap width", opts.strap_width)?;
    check_positive("aperture radius", opts.aperture_radius)?;
    spec.validate().map_err(|violation| TemplateError::InvalidSpec { model_id: spec.model_id.clone(), violation })?;
    if base.device_a != base.device_b {
        return Err(TemplateError::Heterogeneous { a: base.device_a.clone(), b: base.device_b.clone() });
    }
    if base.device_a != spec.model_id {
        return Err(TemplateError::Heterogeneous { a: spec.model_id.clone(), b: base.device_a.clone() });
    }
    if base.layout.stacking != Stacking::Coplanar {
        return Err(TemplateError::InfeasibleBase("the holder needs a coplanar base model".into()));
    }
    let violations = validate_placement(base, GEOMETRY_TOLERANCE_MM);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(TemplateError::InfeasibleBase(text.join("; ")));
    }

    let axis = base.layout.axis;
    let panel = base.rig_bounds();
    let (a0, a1, p0, p1) = match axis {
        Axis::Vertical => (panel.y, panel.bottom(), panel.x, panel.right()),
        Axis::Horizontal => (panel.x, panel.right(), panel.y, panel.bottom()),
    };
    let pt = |along: f64, perp: f64| match axis {
        Axis::Vertical => Point2::new(perp, along),
        Axis::Horizontal => Point2::new(along, perp),
    };

    let set = strap_lengths_for_span(spec.body_thickness, p1 - p0, opts.velcro, opts.cardboard)?;
    let pitch = (a1 - a0) / 6.0;
    let w = opts.strap_width;
    if !(pitch > w / 2.0 && 2.0 * pitch > (w + set.strap4_width) / 2.0) {
        return Err(TemplateError::StrapsDoNotFit(format!(
            "panel length {:.3} mm leaves {:.3} mm between strap centers, strap width {w} mm",
            a1 - a0,
            2.0 * pitch
        )));
    }
    let straps = strap_plan(&set, a0, pitch, w);

    let mut layout = TemplateLayout::new(RigKind::TwoPhone);

    // Outline: the a0 end, the high side with straps 2 and 4, the a1 end, then
    // back along the low side with straps 5, 3, 1.
    let mut outline = vec![pt(a0, p0), pt(a0, p1)];
    for s in straps.iter().filter(|s| s.side == Side::High) {
        let hw = s.width / 2.0;
        outline.extend([
            pt(s.center - hw, p1),
            pt(s.center - hw, p1 + s.length),
            pt(s.center + hw, p1 + s.length),
            pt(s.center + hw, p1),
        ]);
    }
    outline.extend([pt(a1, p1), pt(a1, p0)]);
    for s in straps.iter().rev().filter(|s| s.side == Side::Low) {
        let hw = s.width / 2.0;
        outline.extend([
            pt(s.center + hw, p0),
            pt(s.center + hw, p0 - s.length),
            pt(s.center - hw, p0 - s.length),
            pt(s.center - hw, p0),
        ]);
    }
    layout.pieces.push(Piece::new(
        "holder-outline",
        PieceKind::Cut,
        BASE_PANEL,
        Shape::Polyline { points: outline, closed: true },
    ));

    for s in &straps {
        let (edge, dir) = match s.side {
            Side::Low => (p0, -1.0),
            Side::High => (p1, 1.0),
        };
        let hw = s.width / 2.0;
        let mut parent = BASE_PANEL.to_string();
        for (i, d) in std::iter::once(0.0).chain(s.creases.iter().copied()).enumerate() {
            let perp = edge + dir * d;
            let start = pt(s.center - hw, perp);
            let end = pt(s.center + hw, perp);
            let panel = format!("strap{}.{}", s.number, i);
            let outward = pt(s.center, perp + dir);
            let mut fold = fold_toward_viewer(&panel, &parent, start, end, outward);
            // The Velcro end of a long strap turns back outward after the far side.
            if s.reverse_last && i == s.creases.len() {
                fold.angle_deg = -fold.angle_deg;
            }
            layout.folds.push(fold);
            layout.pieces.push(Piece::new(
                format!("strap{}-fold{}", s.number, i),
                PieceKind::Fold,
                if i == 0 { BASE_PANEL.to_string() } else { parent.clone() },
                Shape::Polyline { points: vec![start, end], closed: false },
            ));
            parent = panel;
        }
        let velcro = Rect::from_corners(
            pt(s.center - hw, edge + dir * (s.length - set.velcro_length)),
            pt(s.center + hw, edge + dir * s.length),
        );
        layout.pieces.push(Piece::new(
            format!("strap{}-velcro", s.number),
            PieceKind::Velcro,
            parent,
            Shape::Rect(velcro),
        ));
    }

    for (id, center) in [("aperture-a", base.camera_a), ("aperture-b", base.camera_b_target)] {
        layout.pieces.push(Piece::new(
            id,
            PieceKind::Aperture,
            BASE_PANEL,
            Shape::Circle { center, radius: opts.aperture_radius },
        ));
    }

    let offset = layout.fit_to_sheet(opts.margin);
    let shift = match axis {
        Axis::Vertical => offset.y,
        Axis::Horizontal => offset.x,
    };
    let positions: Vec<String> =
        straps.iter().map(|s| format!("{}:{}", s.number, fmt_param(s.center + shift))).collect();

    let m = &mut layout.metadata;
    m.insert("rig".into(), RigKind::TwoPhone.as_str().into());
    m.insert("device".into(), spec.model_id.clone());
    m.insert("ipd_mm".into(), fmt_param(base.ipd));
    m.insert("axis".into(), format!("{:?}", axis).to_lowercase());
    m.insert("rotation_b_deg".into(), base.rotation_applied.degrees().to_string());
    m.insert("velcro_mm".into(), fmt_param(set.velcro_length));
    m.insert("cardboard_mm".into(), fmt_param(set.cardboard_thickness));
    m.insert("strap_width_mm".into(), fmt_param(w));
    m.insert("long_strap_mm".into(), fmt_param(set.long_strap_length));
    m.insert("short_strap_mm".into(), fmt_param(set.short_strap_length));
    m.insert("strap4_width_mm".into(), fmt_param(set.strap4_width));
    m.insert("wrap_width_mm".into(), fmt_param(set.wrap_width));
    m.insert("strap_positions_mm".into(), positions.join(","));
    m.insert("aperture_radius_mm".into(), fmt_param(opts.aperture_radius));
    m.insert("rig_to_sheet_mm".into(), format!("{},{}", fmt_param(offset.x), fmt_param(offset.y)));

    layout.check_bounds()?;
    Ok(layout)
}

fn strap_plan(set: &StrapSet, a0: f64, pitch: f64, width: f64) -> Vec<Strap> {
    (1u8..=5)
        .map(|number| {
            let center = a0 + f64::from(number) * pitch;
            match number {
                1 | 3 | 5 => Strap {
                    number,
                    side: Side::Low,
                    center,
                    width,
                    length: set.long_strap_length,
                    creases: set.long_creases().to_vec(),
                    reverse_last: true,
                },
                2 => Strap {
                    number,
                    side: Side::High,
                    center,
                    width,
                    length: set.short_strap_length,
                    creases: set.short_creases().to_vec(),
                    reverse_last: false,
                },
                _ => Strap {
                    number,
                    side: Side::High,
                    center,
                    width: set.strap4_width,
                    length: set.short_strap_length,
                    creases: set.short_creases().to_vec(),
                    reverse_last: false,
                },
            }
        })
        .collect()
}

/// Quarter fold that lifts the outward side of the hinge toward the viewer
/// (negative z), evaluated in the parent's flat frame.
fn fold_toward_viewer(panel: &str, parent: &str, start: Point2, end: Point2, outward: Point2) -> Fold {
    let mut fold = Fold {
        panel: panel.to_string(),
        parent: parent.to_string(),
        hinge_start: start,
        hinge_end: end,
        angle_deg: 90.0,
    };
    if fold.rotate(nalgebra::Point3::new(outward.x, outward.y, 0.0)).z > 0.0 {
        fold.angle_deg = -90.0;
    }
    fold
}
