//! SVG 1.1 emitter and reader for [`TemplateLayout`].
//!
//! User units are millimeters and every coordinate is written with three
//! decimals, so render → parse → render is byte-stable. The non-geometric
//! parts of the layout (rig kind, metadata, folds) travel in a JSON blob
//! inside `<metadata>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Fold, Piece, PieceKind, RigKind, Shape, TemplateError, TemplateLayout};
use crate::geometry::{Point2, Rect};

const SVG_NS: &str = "http://www.w3.org/2000/svg";

#[derive(Serialize, Deserialize)]
struct Embedded {
    kind: RigKind,
    metadata: BTreeMap<String, String>,
    folds: Vec<Fold>,
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn style(kind: PieceKind) -> &'static str {
    match kind {
        PieceKind::Cut => r##"fill="none" stroke="#000000" stroke-width="0.25""##,
        PieceKind::Fold => r##"fill="none" stroke="#0050c8" stroke-width="0.25" stroke-dasharray="3 1.5""##,
        PieceKind::Velcro => r##"fill="url(#hatch)" stroke="#707070" stroke-width="0.2""##,
        PieceKind::Aperture => r##"fill="none" stroke="#c80000" stroke-width="0.25""##,
    }
}

pub fn render_svg(layout: &TemplateLayout) -> Result<String, TemplateError> {
    layout.check_bounds()?;
    let b = layout.sheet_bounds;
    let embedded = Embedded { kind: layout.kind, metadata: layout.metadata.clone(), folds: layout.folds.clone() };
    let json = serde_json::to_string(&embedded).map_err(|e| TemplateError::Svg(e.to_string()))?;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="{SVG_NS}" version="1.1" width="{w}mm" height="{h}mm" viewBox="{x} {y} {w} {h}">"#,
        x = num(b.x),
        y = num(b.y),
        w = num(b.width),
        h = num(b.height),
    );
    let _ = writeln!(out, "<metadata>{}</metadata>", escape(&json));
    out.push_str(
        "<defs><pattern id=\"hatch\" patternUnits=\"userSpaceOnUse\" width=\"2\" height=\"2\" \
         patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"2\" stroke=\"#707070\" \
         stroke-width=\"0.3\"/></pattern></defs>\n",
    );
    for piece in &layout.pieces {
        let head = format!(
            r#"id="{}" class="{}" data-panel="{}""#,
            escape(&piece.id),
            piece.kind.class(),
            escape(&piece.panel)
        );
        let st = style(piece.kind);
        match &piece.shape {
            Shape::Polyline { points, closed } => {
                let mut d = String::new();
                for (i, p) in points.iter().enumerate() {
                    let _ = write!(d, "{}{} {}", if i == 0 { "M " } else { " L " }, num(p.x), num(p.y));
                }
                if *closed {
                    d.push_str(" Z");
                }
                let _ = writeln!(out, r#"<path {head} d="{d}" {st}/>"#);
            }
            Shape::Rect(r) => {
                let _ = writeln!(
                    out,
                    r#"<rect {head} x="{}" y="{}" width="{}" height="{}" {st}/>"#,
                    num(r.x),
                    num(r.y),
                    num(r.width),
                    num(r.height)
                );
            }
            Shape::Circle { center, radius } => {
                let _ = writeln!(
                    out,
                    r#"<circle {head} cx="{}" cy="{}" r="{}" {st}/>"#,
                    num(center.x),
                    num(center.y),
                    num(*radius)
                );
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn err(msg: impl Into<String>) -> TemplateError {
    TemplateError::Svg(msg.into())
}

fn attr_f64(node: roxmltree::Node, name: &str) -> Result<f64, TemplateError> {
    let raw = node.attribute(name).ok_or_else(|| err(format!("<{}> lacks `{name}`", node.tag_name().name())))?;
    raw.trim().parse().map_err(|_| err(format!("`{name}` is not a number: {raw}")))
}

fn parse_path(d: &str) -> Result<(Vec<Point2>, bool), TemplateError> {
    let mut points = Vec::new();
    let mut closed = false;
    let mut tokens = d.split_whitespace().peekable();
    while let Some(tok) = tokens.next() {
        match tok {
            "M" | "L" => {
                let x = tokens.next().ok_or_else(|| err("path ends after command"))?;
                let y = tokens.next().ok_or_else(|| err("path ends after x"))?;
                let x = x.parse().map_err(|_| err(format!("bad path number {x}")))?;
                let y = y.parse().map_err(|_| err(format!("bad path number {y}")))?;
                points.push(Point2::new(x, y));
            }
            "Z" | "z" => closed = true,
            other => return Err(err(format!("unsupported path token `{other}`"))),
        }
    }
    if points.is_empty() {
        return Err(err("empty path"));
    }
    Ok((points, closed))
}

/// Reads back an SVG produced by [`render_svg`].
pub fn parse_svg(text: &str) -> Result<TemplateLayout, TemplateError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| err(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        return Err(err("root element is not <svg>"));
    }
    let view: Vec<f64> = root
        .attribute("viewBox")
        .ok_or_else(|| err("missing viewBox"))?
        .split_whitespace()
        .map(|v| v.parse().map_err(|_| err(format!("bad viewBox value {v}"))))
        .collect::<Result<_, _>>()?;
    let [x, y, w, h] = view[..] else {
        return Err(err("viewBox needs four numbers"));
    };

    let meta_text = root
        .children()
        .find(|n| n.has_tag_name("metadata"))
        .and_then(|n| n.text())
        .ok_or_else(|| err("missing <metadata>"))?;
    let embedded: Embedded = serde_json::from_str(meta_text).map_err(|e| err(format!("metadata: {e}")))?;

    let mut pieces = Vec::new();
    for node in root.descendants().filter(|n| n.is_element()) {
        let Some(kind) = node.attribute("class").and_then(PieceKind::from_class) else {
            continue;
        };
        let id = node.attribute("id").ok_or_else(|| err("piece without id"))?.to_string();
        let panel =
            node.attribute("data-panel").ok_or_else(|| err(format!("piece `{id}` lacks data-panel")))?.to_string();
        let shape = match node.tag_name().name() {
            "path" => {
                let (points, closed) = parse_path(node.attribute("d").ok_or_else(|| err("path without d"))?)?;
                Shape::Polyline { points, closed }
            }
            "rect" => Shape::Rect(Rect::new(
                attr_f64(node, "x")?,
                attr_f64(node, "y")?,
                attr_f64(node, "width")?,
                attr_f64(node, "height")?,
            )),
            "circle" => Shape::Circle {
                center: Point2::new(attr_f64(node, "cx")?, attr_f64(node, "cy")?),
                radius: attr_f64(node, "r")?,
            },
            other => return Err(err(format!("unexpected <{other}> with a layer class"))),
        };
        pieces.push(Piece { id, kind, panel, shape });
    }

    Ok(TemplateLayout {
        kind: embedded.kind,
        sheet_bounds: Rect::new(x, y, w, h),
        pieces,
        folds: embedded.folds,
        metadata: embedded.metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::{three_phone_layout, RigKind};
    use crate::testing::j7;

    #[test]
    fn classes_and_units() {
        let svg = render_svg(&three_phone_layout(&j7()).unwrap()).unwrap();
        assert!(svg.contains(r#"class="cut""#));
        assert!(svg.contains(r#"class="fold""#));
        assert!(svg.contains(r#"class="aperture""#));
        assert!(svg.contains("mm\" viewBox=\"0.000 0.000 "));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn parse_recovers_coordinates() {
        let layout = three_phone_layout(&j7()).unwrap();
        let back = parse_svg(&render_svg(&layout).unwrap()).unwrap();
        assert_eq!(back.kind, RigKind::ThreePhone);
        assert_eq!(back.pieces.len(), layout.pieces.len());
        for (a, b) in layout.pieces.iter().zip(&back.pieces) {
            let (ra, rb) = (a.shape.bounds(), b.shape.bounds());
            assert!((ra.x - rb.x).abs() <= 0.0005 + 1e-12);
            assert!((ra.width - rb.width).abs() <= 0.001 + 1e-12);
        }
        assert_eq!(back.folds, layout.folds);
    }

    #[test]
    fn out_of_sheet_layout_is_not_rendered() {
        let mut layout = three_phone_layout(&j7()).unwrap();
        layout.sheet_bounds.width = 10.0;
        assert!(matches!(render_svg(&layout), Err(TemplateError::OutOfSheet(_))));
    }

    #[test]
    fn metadata_is_escaped() {
        let mut layout = three_phone_layout(&j7()).unwrap();
        layout.metadata.insert("note".into(), "a<b & \"c\"".into());
        let svg = render_svg(&layout).unwrap();
        let back = parse_svg(&svg).unwrap();
        assert_eq!(back.metadata["note"], "a<b & \"c\"");
        assert_eq!(render_svg(&back).unwrap(), svg);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(parse_svg("<svg").is_err());
        assert!(parse_svg("<html/>").is_err());
        assert!(parse_svg(r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1"/>"#).is_err());
    }
}
