//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stereorig::registry::{CapabilitySet, Resolution};
use stereorig::template::TemplateLayout;
use stereorig::{Axis, DeviceSpec, LayoutConfig, Orientation, Point2, Rotation, Stacking};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const RESOLUTIONS: [(u32, u32); 6] = [(640, 480), (1280, 720), (1440, 1080), (1920, 1080), (2560, 1440), (3840, 2160)];
const FRAME_RATES: [u32; 7] = [15, 24, 25, 30, 48, 60, 120];
const FOCUS: [&str; 5] = ["auto", "continuous-video", "infinity", "macro", "fixed"];
const MODES: [&str; 4] = ["color", "monochrome", "sepia", "night"];

fn subset<T: Copy>(rng: &mut ChaCha8Rng, pool: &[T], non_empty: bool) -> Vec<T> {
    loop {
        let picked: Vec<T> = pool.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if !non_empty || !picked.is_empty() {
            return picked;
        }
    }
}

pub fn random_caps(rng: &mut ChaCha8Rng) -> CapabilitySet {
    CapabilitySet {
        resolutions: subset(rng, &RESOLUTIONS, true).into_iter().map(|(w, h)| Resolution::new(w, h)).collect(),
        frame_rates: subset(rng, &FRAME_RATES, true).into_iter().collect(),
        focus_modes: subset(rng, &FOCUS, false).into_iter().map(String::from).collect(),
        capture_modes: subset(rng, &MODES, false).into_iter().map(String::from).collect(),
    }
}

/// Tenths of a millimeter in `[lo, hi]` mm.
fn tenths(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let (lo, hi) = ((lo * 10.0).round() as i64, (hi * 10.0).round() as i64);
    rng.random_range(lo..=hi) as f64 / 10.0
}

/// A phone with 0.1 mm body and camera coordinates and random capabilities.
pub fn random_spec(rng: &mut ChaCha8Rng, id: &str) -> DeviceSpec {
    let w = tenths(rng, 60.0, 90.0);
    let l = tenths(rng, 120.0, 170.0);
    let caps = random_caps(rng);
    let density = f64::from(rng.random_range(80..=250u32)) / 10.0;
    DeviceSpec {
        model_id: id.to_string(),
        body_width: w,
        body_length: l,
        body_thickness: tenths(rng, 6.0, 11.0),
        camera_center: Point2::new(tenths(rng, 5.0, w - 5.0), tenths(rng, 5.0, 30.0)),
        screen_width_px: (w * density).floor() as u32,
        screen_height_px: (l * density).floor() as u32,
        pixel_density: density,
        resolutions: caps.resolutions,
        frame_rates: caps.frame_rates,
        focus_modes: caps.focus_modes,
        capture_modes: caps.capture_modes,
        metadata: None,
    }
}

pub fn corpus(seed: u64, n: usize) -> Vec<DeviceSpec> {
    let mut r = rng(seed);
    (0..n).map(|i| random_spec(&mut r, &format!("rand-{i}"))).collect()
}

pub fn all_layouts() -> Vec<LayoutConfig> {
    let mut out = Vec::new();
    for axis in [Axis::Horizontal, Axis::Vertical] {
        for stacking in [Stacking::Coplanar, Stacking::DepthStacked] {
            for orientation in [Orientation::Portrait, Orientation::Landscape] {
                for rot in Rotation::ALL {
                    out.push(LayoutConfig::new(axis, stacking).with_orientation(orientation).with_rotation(rot));
                }
            }
        }
    }
    out
}

// ---- placement scan ----------------------------------------------------

fn t10(v: f64) -> i64 {
    (v * 10.0).round() as i64
}

/// Footprint (width, length, camera) in tenths after `quarter_turns`
/// clockwise turns, y down.
fn turned(spec: &DeviceSpec, quarter_turns: u32) -> (i64, i64, (i64, i64)) {
    let (mut w, mut l) = (t10(spec.body_width), t10(spec.body_length));
    let (mut x, mut y) = (t10(spec.camera_center.x), t10(spec.camera_center.y));
    for _ in 0..quarter_turns % 4 {
        // Clockwise on the page: the left edge becomes the top edge.
        (x, y) = (l - y, x);
        (w, l) = (l, w);
    }
    (w, l, (x, y))
}

fn turns(r: Rotation) -> u32 {
    r.degrees() / 90
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scan {
    Feasible { rotation: Rotation, area: f64 },
    Infeasible { min_separation: f64 },
}

/// Translates box B in 0.1 mm steps along the layout axis, with cameras on
/// one axis line, and keeps the smallest-area placement whose separation is
/// exactly `ipd`. Unrotated B is tried before `layout.rotation_b`.
pub fn scan_placement(a: &DeviceSpec, b: &DeviceSpec, layout: LayoutConfig, ipd: f64) -> Scan {
    let ipd = t10(ipd);
    let rot_a = if layout.orientation == Orientation::Landscape { 1 } else { 0 };
    let (wa, la, ca) = turned(a, rot_a);
    let mut rotations = vec![Rotation::R0];
    if layout.rotation_b != Rotation::R0 {
        rotations.push(layout.rotation_b);
    }
    let mut min_sep = i64::MAX;
    for rot in rotations {
        let (wb, lb, cb) = turned(b, rot_a + turns(rot));
        let reach = wa + la + wb + lb + ipd;
        let mut best: Option<i64> = None;
        for t in -reach..=reach {
            let (bx, by) = match layout.axis {
                Axis::Horizontal => (t, ca.1 - cb.1),
                Axis::Vertical => (ca.0 - cb.0, t),
            };
            let ok = match layout.stacking {
                Stacking::Coplanar => {
                    let ox = (wa.min(bx + wb) - bx.max(0)) > 0;
                    let oy = (la.min(by + lb) - by.max(0)) > 0;
                    !(ox && oy)
                }
                Stacking::DepthStacked => {
                    let inside = ca.0 > bx && ca.0 < bx + wb && ca.1 > by && ca.1 < by + lb;
                    !inside
                }
            };
            if !ok {
                continue;
            }
            let (dx, dy) = (bx + cb.0 - ca.0, by + cb.1 - ca.1);
            let sep2 = dx * dx + dy * dy;
            min_sep = min_sep.min(((sep2 as f64).sqrt()).round() as i64);
            if sep2 == ipd * ipd {
                let area = (wa.max(bx + wb) - bx.min(0)) * (la.max(by + lb) - by.min(0));
                best = Some(best.map_or(area, |cur| cur.min(area)));
            }
        }
        if let Some(area) = best {
            return Scan::Feasible { rotation: rot, area: area as f64 / 100.0 };
        }
    }
    Scan::Infeasible { min_separation: min_sep as f64 / 10.0 }
}

// ---- folding -----------------------------------------------------------

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    dot(sub(a, b), sub(a, b)).sqrt()
}

/// Rodrigues rotation of `p` about the line through `o` with direction `k`.
fn rotate_about(p: [f64; 3], o: [f64; 3], k: [f64; 3], deg: f64) -> [f64; 3] {
    let k = scale(k, 1.0 / dot(k, k).sqrt());
    let v = sub(p, o);
    let (s, c) = deg.to_radians().sin_cos();
    let r = add(add(scale(v, c), scale(cross(k, v), s)), scale(k, dot(k, v) * (1.0 - c)));
    add(o, r)
}

/// Folds a flat point on `panel` into 3D by walking hinges up to the root.
pub fn fold_point(layout: &TemplateLayout, panel: &str, p: Point2) -> [f64; 3] {
    let mut q = [p.x, p.y, 0.0];
    let mut current = panel.to_string();
    for _ in 0..=layout.folds.len() {
        let Some(f) = layout.folds.iter().find(|f| f.panel == current) else { return q };
        let o = [f.hinge_start.x, f.hinge_start.y, 0.0];
        let k = [f.hinge_end.x - f.hinge_start.x, f.hinge_end.y - f.hinge_start.y, 0.0];
        q = rotate_about(q, o, k, f.angle_deg);
        current = f.parent.clone();
    }
    panic!("fold chain from {panel} does not terminate");
}

/// Folded aperture centers of a layout.
pub fn folded_apertures(layout: &TemplateLayout) -> Vec<[f64; 3]> {
    use stereorig::template::{PieceKind, Shape};
    layout
        .pieces
        .iter()
        .filter(|p| p.kind == PieceKind::Aperture)
        .map(|p| match &p.shape {
            Shape::Circle { center, .. } => fold_point(layout, &p.panel, *center),
            other => fold_point(layout, &p.panel, other.bounds().center()),
        })
        .collect()
}

pub fn pairwise(points: &[[f64; 3]]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            out.push(dist(points[i], points[j]));
        }
    }
    out
}

// ---- negotiation -------------------------------------------------------

/// Lower-of-two by enumeration: best value both sides list, else the
/// smaller of the two maxima.
pub fn brute_pick<T: Ord + Copy>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> T {
    let mut shared: Option<T> = None;
    for x in a {
        for y in b {
            if x == y && shared.is_none_or(|s| *x > s) {
                shared = Some(*x);
            }
        }
    }
    shared.unwrap_or_else(|| {
        let ma = *a.iter().max().unwrap();
        let mb = *b.iter().max().unwrap();
        if ma < mb {
            ma
        } else {
            mb
        }
    })
}

pub fn brute_modes(a: &BTreeSet<String>, b: &BTreeSet<String>) -> BTreeSet<String> {
    a.iter().filter(|m| b.iter().any(|n| n == *m)).cloned().collect()
}

// ---- merging -----------------------------------------------------------

pub fn luma_f64(p: [u8; 3]) -> u8 {
    ((299.0 * f64::from(p[0]) + 587.0 * f64::from(p[1]) + 114.0 * f64::from(p[2])) / 1000.0).round() as u8
}

/// O(n·m) rendition of the greedy pairing rule.
pub fn naive_greedy(left: &[f64], right: &[f64], tol: f64) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    let mut used = vec![false; right.len()];
    let mut pairs = Vec::new();
    let mut dl = Vec::new();
    for (i, l) in left.iter().enumerate() {
        let mut pick: Option<usize> = None;
        for (j, r) in right.iter().enumerate() {
            if used[j] || (r - l).abs() > tol {
                continue;
            }
            let better = match pick {
                None => true,
                Some(k) => (r - l).abs() < (right[k] - l).abs(),
            };
            if better {
                pick = Some(j);
            }
        }
        match pick {
            Some(j) => {
                used[j] = true;
                pairs.push((i, j));
            }
            None => dl.push(i),
        }
    }
    let dr = (0..right.len()).filter(|j| !used[*j]).collect();
    (pairs, dl, dr)
}

pub fn random_stream(rng: &mut ChaCha8Rng, n: usize, period: f64, jitter: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let dt = rng.random_range(-jitter..=jitter);
        if rng.random_bool(0.9) {
            out.push(i as f64 * period + dt);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}
