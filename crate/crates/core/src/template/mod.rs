//! Printable rig templates.
//!
//! A [`TemplateLayout`] is a flat sheet of tagged pieces in millimeters. Each
//! piece belongs to a named panel; panels are connected by [`Fold`]s, so the
//! assembled 3D position of any point on the sheet can be recomputed from the
//! layout alone. That is how camera-aperture spacing is checked in software.

mod mirror;
mod straps;
mod svg;
mod three_phone;
mod two_phone;

use std::collections::BTreeMap;

use nalgebra::{Point3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::AlignmentError;
use crate::geometry::{Point2, Rect};
use crate::registry::SpecViolation;

pub use mirror::{
    mirror_rig, mirror_rig_layout, mirror_rig_layout_with, reflect, MirrorOptions, MirrorRig, MirrorSide,
};
pub use straps::{strap_lengths, strap_lengths_for_span, StrapSet, DEFAULT_CARDBOARD_MM, DEFAULT_VELCRO_MM};
pub use svg::{parse_svg, render_svg};
pub use three_phone::{three_phone_layout, three_phone_layout_with, triangle_panel_width, ThreePhoneOptions};
pub use two_phone::{two_phone_layout, two_phone_layout_with, TwoPhoneOptions};

/// Root panel name used by every generator.
pub const BASE_PANEL: &str = "base";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RigKind {
    TwoPhone,
    ThreePhone,
    Mirror,
}

impl RigKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RigKind::TwoPhone => "two-phone",
            RigKind::ThreePhone => "three-phone",
            RigKind::Mirror => "mirror",
        }
    }
}

/// Layer a piece is drawn on. The SVG class attribute uses the same names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PieceKind {
    Cut,
    Fold,
    Velcro,
    Aperture,
}

impl PieceKind {
    pub fn class(self) -> &'static str {
        match self {
            PieceKind::Cut => "cut",
            PieceKind::Fold => "fold",
            PieceKind::Velcro => "velcro",
            PieceKind::Aperture => "aperture",
        }
    }

    pub fn from_class(class: &str) -> Option<PieceKind> {
        match class {
            "cut" => Some(PieceKind::Cut),
            "fold" => Some(PieceKind::Fold),
            "velcro" => Some(PieceKind::Velcro),
            "aperture" => Some(PieceKind::Aperture),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Polyline { points: Vec<Point2>, closed: bool },
    Rect(Rect),
    Circle { center: Point2, radius: f64 },
}

impl Shape {
    pub fn bounds(&self) -> Rect {
        match self {
            Shape::Polyline { points, .. } => {
                let mut r = Rect::new(points[0].x, points[0].y, 0.0, 0.0);
                for p in &points[1..] {
                    r = r.union(&Rect::new(p.x, p.y, 0.0, 0.0));
                }
                r
            }
            Shape::Rect(r) => *r,
            Shape::Circle { center, radius } => {
                Rect::new(center.x - radius, center.y - radius, 2.0 * radius, 2.0 * radius)
            }
        }
    }

    fn translate(&mut self, d: Point2) {
        match self {
            Shape::Polyline { points, .. } => points.iter_mut().for_each(|p| *p = *p + d),
            Shape::Rect(r) => *r = r.translate(d.x, d.y),
            Shape::Circle { center, .. } => *center = *center + d,
        }
    }

    /// Boundary as a list of segments (circles excluded).
    pub fn segments(&self) -> Vec<(Point2, Point2)> {
        match self {
            Shape::Polyline { points, closed } => {
                let mut segs: Vec<_> = points.windows(2).map(|w| (w[0], w[1])).collect();
                if *closed && points.len() > 2 {
                    segs.push((points[points.len() - 1], points[0]));
                }
                segs
            }
            Shape::Rect(r) => {
                let c = r.corners();
                (0..4).map(|i| (c[i], c[(i + 1) % 4])).collect()
            }
            Shape::Circle { .. } => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub id: String,
    pub kind: PieceKind,
    pub panel: String,
    pub shape: Shape,
}

impl Piece {
    pub fn new(id: impl Into<String>, kind: PieceKind, panel: impl Into<String>, shape: Shape) -> Self {
        Self { id: id.into(), kind, panel: panel.into(), shape }
    }
}

/// Hinge between `panel` and its `parent`. Folding rotates `panel` (and all
/// panels hanging off it) by `angle_deg` about the directed hinge line, using
/// the right-hand rule in the sheet frame (x right, y down, z = x × y).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub panel: String,
    pub parent: String,
    pub hinge_start: Point2,
    pub hinge_end: Point2,
    pub angle_deg: f64,
}

impl Fold {
    fn rotate(&self, p: Point3<f64>) -> Point3<f64> {
        let origin = Point3::new(self.hinge_start.x, self.hinge_start.y, 0.0);
        let dir = Vector3::new(self.hinge_end.x - self.hinge_start.x, self.hinge_end.y - self.hinge_start.y, 0.0);
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(dir), self.angle_deg.to_radians());
        origin + rot * (p - origin)
    }

    fn translate(&mut self, d: Point2) {
        self.hinge_start = self.hinge_start + d;
        self.hinge_end = self.hinge_end + d;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateLayout {
    pub kind: RigKind,
    pub sheet_bounds: Rect,
    pub pieces: Vec<Piece>,
    pub folds: Vec<Fold>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("non-positive {name}: {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("heterogeneous devices unsupported: `{a}` and `{b}`")]
    Heterogeneous { a: String, b: String },
    #[error("base model is not feasible: {0}")]
    InfeasibleBase(String),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error("device `{model_id}`: {violation}")]
    InvalidSpec { model_id: String, violation: SpecViolation },
    #[error("device too small to realize the triangular rig: {0}")]
    TriangleInfeasible(String),
    #[error("straps do not fit along the panel: {0}")]
    StrapsDoNotFit(String),
    #[error("piece `{0}` lies outside the sheet bounds")]
    OutOfSheet(String),
    #[error("fold chain for panel `{0}` is cyclic")]
    CyclicFolds(String),
    #[error("malformed SVG template: {0}")]
    Svg(String),
}

impl TemplateLayout {
    fn new(kind: RigKind) -> Self {
        Self { kind, sheet_bounds: Rect::default(), pieces: Vec::new(), folds: Vec::new(), metadata: BTreeMap::new() }
    }

    pub fn piece(&self, id: &str) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.id == id)
    }

    pub fn pieces_of(&self, kind: PieceKind) -> impl Iterator<Item = &Piece> {
        self.pieces.iter().filter(move |p| p.kind == kind)
    }

    /// Moves everything so that the content sits `margin` inside a sheet
    /// anchored at the origin. Returns the applied offset.
    fn fit_to_sheet(&mut self, margin: f64) -> Point2 {
        let content = self.pieces.iter().map(|p| p.shape.bounds()).reduce(|a, b| a.union(&b)).unwrap_or_default();
        let d = Point2::new(margin - content.x, margin - content.y);
        for p in &mut self.pieces {
            p.shape.translate(d);
        }
        for f in &mut self.folds {
            f.translate(d);
        }
        self.sheet_bounds = Rect::new(0.0, 0.0, content.width + 2.0 * margin, content.height + 2.0 * margin);
        d
    }

    /// Every piece must lie within the sheet.
    pub fn check_bounds(&self) -> Result<(), TemplateError> {
        match self.pieces.iter().find(|p| !self.sheet_bounds.contains_rect(&p.shape.bounds(), 1e-9)) {
            Some(p) => Err(TemplateError::OutOfSheet(p.id.clone())),
            None => Ok(()),
        }
    }

    /// Maps a sheet point lying on `panel` into the assembled rig frame by
    /// applying the panel's fold chain, innermost hinge first.
    pub fn assemble_point(&self, panel: &str, p: Point2) -> Result<Point3<f64>, TemplateError> {
        let mut q = Point3::new(p.x, p.y, 0.0);
        let mut current = panel;
        for _ in 0..=self.folds.len() {
            match self.folds.iter().find(|f| f.panel == current) {
                Some(fold) => {
                    q = fold.rotate(q);
                    current = &fold.parent;
                }
                None => return Ok(q),
            }
        }
        Err(TemplateError::CyclicFolds(panel.to_string()))
    }

    /// Assembled positions of all camera apertures, in piece order.
    pub fn assembled_apertures(&self) -> Result<Vec<(String, Point3<f64>)>, TemplateError> {
        self.pieces_of(PieceKind::Aperture)
            .map(|piece| {
                let center = match &piece.shape {
                    Shape::Circle { center, .. } => *center,
                    other => other.bounds().center(),
                };
                Ok((piece.id.clone(), self.assemble_point(&piece.panel, center)?))
            })
            .collect()
    }

    /// Pairwise distances between assembled aperture centers.
    pub fn assembled_aperture_distances(&self) -> Result<Vec<f64>, TemplateError> {
        let pts = self.assembled_apertures()?;
        let mut out = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                out.push((pts[i].1 - pts[j].1).norm());
            }
        }
        Ok(out)
    }
}

fn fmt_param(v: f64) -> String {
    format!("{v}")
}

fn check_positive(name: &'static str, value: f64) -> Result<(), TemplateError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(TemplateError::NonPositive { name, value })
    }
}

fn rect_polyline(r: Rect) -> Shape {
    Shape::Polyline { points: r.corners().to_vec(), closed: true }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_fold_lifts_point_out_of_sheet() {
        let mut layout = TemplateLayout::new(RigKind::TwoPhone);
        layout.folds.push(Fold {
            panel: "flap".into(),
            parent: BASE_PANEL.into(),
            hinge_start: Point2::new(0.0, 0.0),
            hinge_end: Point2::new(0.0, 10.0),
            angle_deg: 90.0,
        });
        let q = layout.assemble_point("flap", Point2::new(-5.0, 3.0)).unwrap();
        assert!(q.x.abs() < 1e-12);
        assert!((q.y - 3.0).abs() < 1e-12);
        assert!((q.z.abs() - 5.0).abs() < 1e-12);
        let untouched = layout.assemble_point(BASE_PANEL, Point2::new(1.0, 2.0)).unwrap();
        assert_eq!(untouched, Point3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn cyclic_folds_are_detected() {
        let mut layout = TemplateLayout::new(RigKind::TwoPhone);
        for (panel, parent) in [("a", "b"), ("b", "a")] {
            layout.folds.push(Fold {
                panel: panel.into(),
                parent: parent.into(),
                hinge_start: Point2::new(0.0, 0.0),
                hinge_end: Point2::new(1.0, 0.0),
                angle_deg: 10.0,
            });
        }
        assert!(matches!(layout.assemble_point("a", Point2::default()), Err(TemplateError::CyclicFolds(_))));
    }

    #[test]
    fn out_of_sheet_piece_is_reported() {
        let mut layout = TemplateLayout::new(RigKind::Mirror);
        layout.sheet_bounds = Rect::new(0.0, 0.0, 10.0, 10.0);
        layout.pieces.push(Piece::new(
            "hole",
            PieceKind::Aperture,
            BASE_PANEL,
            Shape::Circle { center: Point2::new(9.0, 5.0), radius: 2.0 },
        ));
        assert!(matches!(layout.check_bounds(), Err(TemplateError::OutOfSheet(id)) if id == "hole"));
    }
}
