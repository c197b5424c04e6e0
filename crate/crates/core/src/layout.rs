//! Physical geometry: staggered edge-coupled layout, folded hairpin
//! resonators on a multilayer stackup, and SVG export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::microstrip::{
    analyze_single, resonator_length, synthesize_single, CoupledSectionDims, MicrostripError, ModeParams,
    Substrate,
};

/// Feed stub length used when none is given, mm.
pub const DEFAULT_FEED_LENGTH: f64 = 1.0;
pub const DEFAULT_EPOXY_THICKNESS: f64 = 0.05;
pub const DEFAULT_EPOXY_EPS_R: f64 = 3.6;
const COPPER: &str = "copper";
const AREA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("hairpin of length {l} mm cannot fold with arm gap {arm_gap} mm and width {w} mm")]
    FoldTooTight { l: f64, arm_gap: f64, w: f64 },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid stackup: {0}")]
    InvalidStackup(String),
    #[error(transparent)]
    Microstrip(#[from] MicrostripError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Closed rectilinear polygon; the closing edge is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, LayoutError> {
        let p = Self { vertices };
        p.validate()?;
        Ok(p)
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let (xa, xb) = (x0.min(x1), x0.max(x1));
        let (ya, yb) = (y0.min(y1), y0.max(y1));
        Self {
            vertices: vec![Point::new(xa, ya), Point::new(xb, ya), Point::new(xb, yb), Point::new(xa, yb)],
        }
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn validate(&self) -> Result<(), LayoutError> {
        if self.vertices.len() < 4 {
            return Err(LayoutError::Geometry(format!("polygon has {} vertices", self.vertices.len())));
        }
        if self.vertices.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(LayoutError::Geometry("non-finite vertex".into()));
        }
        if self.edges().any(|(a, b)| a.x != b.x && a.y != b.y) {
            return Err(LayoutError::Geometry("polygon edge is not axis-aligned".into()));
        }
        if !(self.area() > AREA_EPS) {
            return Err(LayoutError::Geometry("polygon has no area".into()));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>().abs()
    }

    pub fn bbox(&self) -> BBox {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BBox { min, max }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Polygon {
        Polygon { vertices: self.vertices.iter().map(|p| Point::new(p.x + dx, p.y + dy)).collect() }
    }

    /// Decomposes into disjoint rectangles `(x0, y0, x1, y1)` by horizontal slabs.
    pub fn to_rects(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut ys: Vec<f64> = self.vertices.iter().map(|p| p.y).collect();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let verticals: Vec<(f64, f64, f64)> = self
            .edges()
            .filter(|(a, b)| a.x == b.x && a.y != b.y)
            .map(|(a, b)| (a.x, a.y.min(b.y), a.y.max(b.y)))
            .collect();
        let mut rects = Vec::new();
        for slab in ys.windows(2) {
            let mid = 0.5 * (slab[0] + slab[1]);
            let mut xs: Vec<f64> =
                verticals.iter().filter(|(_, lo, hi)| *lo < mid && mid < *hi).map(|(x, _, _)| *x).collect();
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                rects.push((pair[0], slab[0], pair[1], slab[1]));
            }
        }
        rects
    }

    /// Area shared with `other`.
    pub fn intersection_area(&self, other: &Polygon) -> f64 {
        let (a, b) = (self.to_rects(), other.to_rects());
        let mut total = 0.0;
        for r in &a {
            for s in &b {
                let w = r.2.min(s.2) - r.0.max(s.0);
                let h = r.3.min(s.3) - r.1.max(s.1);
                if w > 0.0 && h > 0.0 {
                    total += w * h;
                }
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerRole {
    ResonatorTop,
    Core,
    ResonatorBottom,
    Epoxy,
    Ground,
}

impl LayerRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            LayerRole::ResonatorTop => "resonator-top",
            LayerRole::Core => "core",
            LayerRole::ResonatorBottom => "resonator-bottom",
            LayerRole::Epoxy => "epoxy",
            LayerRole::Ground => "ground",
        }
    }

    pub fn is_metal(&self) -> bool {
        matches!(self, LayerRole::ResonatorTop | LayerRole::ResonatorBottom | LayerRole::Ground)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackupLayer {
    pub role: LayerRole,
    pub material: String,
    pub thickness: f64,
    pub z_offset: f64,
}

/// Board layers listed from the ground plane upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stackup {
    pub layers: Vec<StackupLayer>,
}

impl Stackup {
    /// Builds a stackup from `(role, material, thickness)` entries, bottom
    /// first, assigning contiguous z offsets from zero.
    pub fn from_layers(layers: &[(LayerRole, &str, f64)]) -> Result<Self, LayoutError> {
        let mut z = 0.0;
        let layers = layers
            .iter()
            .map(|(role, material, thickness)| {
                let layer = StackupLayer { role: *role, material: material.to_string(), thickness: *thickness, z_offset: z };
                z += thickness;
                layer
            })
            .collect();
        let s = Self { layers };
        s.validate()?;
        Ok(s)
    }

    /// Single-layer microstrip board.
    pub fn microstrip(sub: &Substrate) -> Result<Self, LayoutError> {
        Self::from_layers(&[
            (LayerRole::Ground, COPPER, sub.t),
            (LayerRole::Core, &sub.name, sub.h),
            (LayerRole::ResonatorTop, COPPER, sub.t),
        ])
    }

    /// Ground foil, epoxy bond, bottom resonator metal, core, top resonator metal.
    pub fn multilayer(sub: &Substrate, epoxy_thickness: f64) -> Result<Self, LayoutError> {
        Self::from_layers(&[
            (LayerRole::Ground, COPPER, sub.t),
            (LayerRole::Epoxy, "epoxy", epoxy_thickness),
            (LayerRole::ResonatorBottom, COPPER, sub.t),
            (LayerRole::Core, &sub.name, sub.h),
            (LayerRole::ResonatorTop, COPPER, sub.t),
        ])
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        let bad = |m: String| Err(LayoutError::InvalidStackup(m));
        let grounds = self.layers.iter().filter(|l| l.role == LayerRole::Ground).count();
        if grounds != 1 {
            return bad(format!("expected one ground layer, found {grounds}"));
        }
        let mut z = self.layers.first().map_or(0.0, |l| l.z_offset);
        for l in &self.layers {
            if !(l.thickness > 0.0 && l.thickness.is_finite()) {
                return bad(format!("{} layer thickness {}", l.role.as_str(), l.thickness));
            }
            if (l.z_offset - z).abs() > 1e-9 {
                return bad(format!("{} layer starts at {} mm, expected {z} mm", l.role.as_str(), l.z_offset));
            }
            z = l.z_offset + l.thickness;
        }
        Ok(())
    }

    pub fn index_of(&self, role: LayerRole) -> Option<usize> {
        self.layers.iter().position(|l| l.role == role)
    }

    pub fn total_thickness(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| l.z_offset + l.thickness)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutElement {
    pub layer_index: usize,
    pub polygon: Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Port {
    pub label: String,
    pub position: Point,
}

/// Placed metal shapes with their stackup, normalized so the bounding box
/// starts at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterLayout {
    pub elements: Vec<LayoutElement>,
    /// (width, height) in mm.
    pub bounds: (f64, f64),
    pub ports: [Port; 2],
    pub stackup: Stackup,
}

impl FilterLayout {
    pub fn new(
        elements: Vec<LayoutElement>,
        ports: [Port; 2],
        stackup: Stackup,
    ) -> Result<Self, LayoutError> {
        stackup.validate()?;
        for e in &elements {
            e.polygon.validate()?;
            match stackup.layers.get(e.layer_index) {
                Some(l) if l.role.is_metal() => {}
                _ => return Err(LayoutError::Geometry(format!("layer {} is not a metal layer", e.layer_index))),
            }
        }
        for (i, a) in elements.iter().enumerate() {
            for b in &elements[i + 1..] {
                if a.layer_index == b.layer_index && a.polygon.intersection_area(&b.polygon) > AREA_EPS {
                    return Err(LayoutError::Geometry(format!("shapes overlap on layer {}", a.layer_index)));
                }
            }
        }
        let Some(bb) = bbox_of(&elements) else {
            return Ok(Self { elements, bounds: (0.0, 0.0), ports, stackup });
        };
        let (dx, dy) = (-bb.min.x, -bb.min.y);
        let elements = elements
            .into_iter()
            .map(|e| LayoutElement { layer_index: e.layer_index, polygon: e.polygon.translated(dx, dy) })
            .collect();
        let ports = ports.map(|p| Port { label: p.label, position: Point::new(p.position.x + dx, p.position.y + dy) });
        Ok(Self { elements, bounds: (bb.width(), bb.height()), ports, stackup })
    }

    pub fn area(&self) -> f64 {
        self.bounds.0 * self.bounds.1
    }

    /// Bounding box recomputed from the polygon vertices.
    pub fn vertex_bbox(&self) -> Option<BBox> {
        bbox_of(&self.elements)
    }

    pub fn layers_used(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.elements.iter().map(|e| e.layer_index).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn bbox_of(elements: &[LayoutElement]) -> Option<BBox> {
    elements.iter().map(|e| e.polygon.bbox()).reduce(|a, b| BBox {
        min: Point::new(a.min.x.min(b.min.x), a.min.y.min(b.min.y)),
        max: Point::new(a.max.x.max(b.max.x), a.max.y.max(b.max.y)),
    })
}

/// Plan-view area ratio `a / b`.
pub fn area_ratio(a: &FilterLayout, b: &FilterLayout) -> f64 {
    a.area() / b.area()
}

/// Staggered edge-coupled layout with the default feed length.
pub fn pcl_layout(dims: &[CoupledSectionDims], feed_width: f64) -> Result<FilterLayout, LayoutError> {
    pcl_layout_with_feed(dims, feed_width, DEFAULT_FEED_LENGTH)
}

/// Staggered edge-coupled layout on a single metal layer. Section `i`
/// occupies `x_i .. x_i + L_i`; its upper strip continues as the lower strip
/// of section `i + 1`.
pub fn pcl_layout_with_feed(
    dims: &[CoupledSectionDims],
    feed_width: f64,
    feed_length: f64,
) -> Result<FilterLayout, LayoutError> {
    if dims.is_empty() {
        return Err(LayoutError::Geometry("no coupled sections".into()));
    }
    if dims.iter().any(|d| !(d.w > 0.0 && d.s > 0.0 && d.l > 0.0)) {
        return Err(LayoutError::Geometry("section dimensions must be positive".into()));
    }
    if !(feed_width > 0.0 && feed_length >= 0.0) {
        return Err(LayoutError::Geometry(format!("feed {feed_width} x {feed_length} mm")));
    }
    let stackup = Stackup::from_layers(&[
        (LayerRole::Ground, COPPER, 0.035),
        (LayerRole::Core, "substrate", 1.0),
        (LayerRole::ResonatorTop, COPPER, 0.035),
    ])?;
    let top = 2;
    let mut elements = Vec::with_capacity(2 * dims.len() + 2);
    let (mut x, mut y) = (0.0, 0.0);
    for d in dims {
        let upper = y + d.w + d.s;
        elements.push(Polygon::rect(x, y, x + d.l, y + d.w));
        elements.push(Polygon::rect(x, upper, x + d.l, upper + d.w));
        x += d.l;
        y = upper;
    }
    let (first, last) = (&dims[0], &dims[dims.len() - 1]);
    let in_y = first.w / 2.0;
    let out_y = y + last.w / 2.0;
    let half = feed_width / 2.0;
    let mut ports = [
        Port { label: "P1".into(), position: Point::new(0.0, in_y) },
        Port { label: "P2".into(), position: Point::new(x, out_y) },
    ];
    if feed_length > 0.0 {
        elements.push(Polygon::rect(-feed_length, in_y - half, 0.0, in_y + half));
        elements.push(Polygon::rect(x, out_y - half, x + feed_length, out_y + half));
        ports[0].position.x = -feed_length;
        ports[1].position.x = x + feed_length;
    }
    let elements = elements.into_iter().map(|polygon| LayoutElement { layer_index: top, polygon }).collect();
    FilterLayout::new(elements, ports, stackup)
}

/// PCL layout tagged with the substrate's own stackup.
pub fn pcl_layout_on(
    dims: &[CoupledSectionDims],
    feed_width: f64,
    feed_length: f64,
    sub: &Substrate,
) -> Result<FilterLayout, LayoutError> {
    let mut layout = pcl_layout_with_feed(dims, feed_width, feed_length)?;
    layout.stackup = Stackup::microstrip(sub)?;
    Ok(layout)
}

/// A half-wave resonator folded into a U with its opening facing +y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hairpin {
    pub polygon: Polygon,
    pub l_half_wave: f64,
    pub arm_gap: f64,
    pub w: f64,
    /// Centerline length of each arm, mm.
    pub arm_length: f64,
}

impl Hairpin {
    /// Outer width across both arms.
    pub fn width(&self) -> f64 {
        self.arm_gap + 2.0 * self.w
    }

    pub fn height(&self) -> f64 {
        self.arm_length + self.w / 2.0
    }

    /// Centerline: up the left arm's axis, across the base, down the right.
    pub fn centerline(&self) -> Vec<Point> {
        let (h, c) = (self.w / 2.0, self.height());
        let right = self.width() - h;
        vec![Point::new(h, c), Point::new(h, h), Point::new(right, h), Point::new(right, c)]
    }
}

pub fn path_length(path: &[Point]) -> f64 {
    path.windows(2).map(|s| (s[1].x - s[0].x).hypot(s[1].y - s[0].y)).sum()
}

/// Folds a half-wave line of length `l_half_wave` into a U whose arms are
/// `arm_gap` apart (inner edge to inner edge) with strip width `w`.
pub fn hairpin_fold(l_half_wave: f64, arm_gap: f64, w: f64) -> Result<Hairpin, LayoutError> {
    if !(w > 0.0 && arm_gap > 0.0 && l_half_wave.is_finite() && l_half_wave > 2.0 * (arm_gap + w)) {
        return Err(LayoutError::FoldTooTight { l: l_half_wave, arm_gap, w });
    }
    let arm_length = (l_half_wave - arm_gap - w) / 2.0;
    let width = arm_gap + 2.0 * w;
    let height = arm_length + w / 2.0;
    let vertices = vec![
        Point::new(0.0, 0.0),
        Point::new(width, 0.0),
        Point::new(width, height),
        Point::new(width - w, height),
        Point::new(width - w, w),
        Point::new(w, w),
        Point::new(w, height),
        Point::new(0.0, height),
    ];
    Ok(Hairpin { polygon: Polygon { vertices }, l_half_wave, arm_gap, w, arm_length })
}

/// Placement parameters of the multilayer hairpin layout beyond `overlap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlLayoutOptions {
    /// Edge spacing between resonators 2 and 3, which share a layer, mm.
    pub same_layer_gap: f64,
    pub feed_width: f64,
    pub feed_length: f64,
}

/// Four hairpins alternating between the two resonator layers: 1 and 4 on
/// top, 2 and 3 on the bottom. Each top/bottom neighbour pair overlaps in
/// plan view by `overlap`; feeds drop from the outer arms of 1 and 4.
pub fn ml_hairpin_layout(
    resonators: &[Hairpin],
    overlap: f64,
    stackup: &Stackup,
    opts: &MlLayoutOptions,
) -> Result<FilterLayout, LayoutError> {
    if resonators.len() != 4 {
        return Err(LayoutError::Geometry(format!("expected 4 resonators, got {}", resonators.len())));
    }
    stackup.validate()?;
    let top = stackup
        .index_of(LayerRole::ResonatorTop)
        .ok_or_else(|| LayoutError::InvalidStackup("no resonator-top layer".into()))?;
    let bottom = stackup
        .index_of(LayerRole::ResonatorBottom)
        .ok_or_else(|| LayoutError::InvalidStackup("no resonator-bottom layer".into()))?;
    if !(overlap >= 0.0) {
        return Err(LayoutError::Geometry(format!("overlap {overlap} mm")));
    }
    for r in resonators {
        if overlap > r.arm_length || overlap >= r.width() {
            return Err(LayoutError::Geometry(format!(
                "overlap {overlap} mm exceeds resonator arm ({} mm long, {} mm wide)",
                r.arm_length,
                r.width()
            )));
        }
    }
    if !(opts.same_layer_gap > 0.0 && opts.feed_width > 0.0 && opts.feed_length >= 0.0) {
        return Err(LayoutError::Geometry("gap and feed dimensions must be positive".into()));
    }

    let layers = [top, bottom, bottom, top];
    let mut x = 0.0;
    let mut elements = Vec::with_capacity(6);
    let mut offsets = [0.0; 4];
    for (i, r) in resonators.iter().enumerate() {
        if i > 0 {
            let prev = &resonators[i - 1];
            x += prev.width() - if layers[i] == layers[i - 1] { -opts.same_layer_gap } else { overlap };
        }
        offsets[i] = x;
        elements.push(LayoutElement { layer_index: layers[i], polygon: r.polygon.translated(x, 0.0) });
    }

    let in_x = resonators[0].w / 2.0;
    let out_x = offsets[3] + resonators[3].width() - resonators[3].w / 2.0;
    let half = opts.feed_width / 2.0;
    let y_port = -opts.feed_length;
    if opts.feed_length > 0.0 {
        for cx in [in_x, out_x] {
            elements.push(LayoutElement { layer_index: top, polygon: Polygon::rect(cx - half, y_port, cx + half, 0.0) });
        }
    }
    let ports = [
        Port { label: "P1".into(), position: Point::new(in_x, y_port) },
        Port { label: "P2".into(), position: Point::new(out_x, y_port) },
    ];
    FilterLayout::new(elements, ports, stackup.clone())
}

/// Free geometry of the multilayer hairpin filter. Resonator strips use
/// the 50 Ω line width of the core substrate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlHairpinParams {
    pub arm_gap: f64,
    pub overlap: f64,
    pub same_layer_gap: f64,
    pub epoxy_thickness: f64,
    /// Feed stub length; a quarter guided wavelength of the feed line when unset.
    pub feed_length: Option<f64>,
}

impl Default for MlHairpinParams {
    fn default() -> Self {
        Self {
            arm_gap: 3.0,
            overlap: 1.0,
            same_layer_gap: 1.0,
            epoxy_thickness: DEFAULT_EPOXY_THICKNESS,
            feed_length: None,
        }
    }
}

/// Four identical half-wave hairpins at `f0_ghz` on `sub`, placed with
/// [`ml_hairpin_layout`].
pub fn ml_layout_for_substrate(
    sub: &Substrate,
    f0_ghz: f64,
    z0: f64,
    params: &MlHairpinParams,
) -> Result<FilterLayout, LayoutError> {
    let w = synthesize_single(z0, sub)?;
    let line = analyze_single(w, sub)?;
    let quarter = resonator_length(&ModeParams::ideal(line.z0, line.z0, line.eps_eff), f0_ghz);
    let hairpin = hairpin_fold(2.0 * quarter, params.arm_gap, w)?;
    let stackup = Stackup::multilayer(sub, params.epoxy_thickness)?;
    let opts = MlLayoutOptions {
        same_layer_gap: params.same_layer_gap,
        feed_width: w,
        feed_length: params.feed_length.unwrap_or(quarter),
    };
    ml_hairpin_layout(&vec![hairpin; 4], params.overlap, &stackup, &opts)
}

const PALETTE: [&str; 6] = ["#b87333", "#1f5fbf", "#2f9e44", "#c92a2a", "#7048e8", "#868e96"];

fn units(v: f64) -> i64 {
    (v * 100.0).round() as i64
}

/// Renders the layout as SVG with 0.01 mm user units and +y pointing up on
/// the board.
pub fn export_svg(layout: &FilterLayout) -> String {
    let (w, h) = (units(layout.bounds.0), units(layout.bounds.1));
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.2}mm" height="{:.2}mm" viewBox="0 0 {w} {h}">"#,
        w as f64 / 100.0,
        h as f64 / 100.0
    );
    out.push_str("<!--\n");
    let _ = writeln!(out, "  bounds_mm: {:.3} x {:.3}", layout.bounds.0, layout.bounds.1);
    for (i, l) in layout.stackup.layers.iter().enumerate() {
        let _ = writeln!(
            out,
            "  layer {i}: {} {} thickness={:.4} z={:.4}",
            l.role.as_str(),
            sanitize(&l.material),
            l.thickness,
            l.z_offset
        );
    }
    for p in &layout.ports {
        let _ = writeln!(out, "  port {}: {:.3} {:.3}", sanitize(&p.label), p.position.x, p.position.y);
    }
    out.push_str("-->\n");
    for idx in layout.layers_used() {
        let role = layout.stackup.layers.get(idx).map_or("unknown", |l| l.role.as_str());
        let _ = writeln!(
            out,
            r#"<g id="layer-{idx}" data-role="{role}" fill="{}">"#,
            PALETTE[idx % PALETTE.len()]
        );
        for e in layout.elements.iter().filter(|e| e.layer_index == idx) {
            out.push_str("<path d=\"");
            for (k, p) in e.polygon.vertices.iter().enumerate() {
                let cmd = if k == 0 { "M" } else { " L" };
                let _ = write!(out, "{cmd} {} {}", units(p.x), h - units(p.y));
            }
            out.push_str(" Z\"/>\n");
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn sanitize(s: &str) -> String {
    s.replace("--", "- -").replace(['<', '>'], "_")
}

/// Recovers `(layer_index, polygon)` pairs in mm from SVG written by
/// [`export_svg`].
pub fn parse_svg_polygons(svg: &str) -> Result<Vec<(usize, Polygon)>, LayoutError> {
    let bad = |m: &str| LayoutError::Geometry(format!("svg: {m}"));
    let view = svg
        .split("viewBox=\"")
        .nth(1)
        .and_then(|s| s.split('"').next())
        .ok_or_else(|| bad("missing viewBox"))?;
    let height: f64 = view
        .split_whitespace()
        .nth(3)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("bad viewBox"))?;
    let mut layer = None;
    let mut out = Vec::new();
    for line in svg.lines() {
        if let Some(rest) = line.strip_prefix("<g id=\"layer-") {
            let idx = rest.split('"').next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad group id"))?;
            layer = Some(idx);
        } else if let Some(rest) = line.strip_prefix("<path d=\"") {
            let d = rest.split('"').next().ok_or_else(|| bad("bad path"))?;
            let nums: Vec<f64> = d
                .split_whitespace()
                .filter(|t| !matches!(*t, "M" | "L" | "Z"))
                .map(|t| t.parse::<f64>().map_err(|_| bad("bad coordinate")))
                .collect::<Result<_, _>>()?;
            let vertices = nums.chunks_exact(2).map(|c| Point::new(c[0] / 100.0, (height - c[1]) / 100.0)).collect();
            out.push((layer.ok_or_else(|| bad("path outside group"))?, Polygon { vertices }));
        }
    }
    Ok(out)
}
