use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::annotation::{canonical_json, xml_escape, ANNOTATION_ID};
use super::{SceneError, SceneGraph};
use crate::geometry::{Point, Pose};
use crate::record::VehicleLabel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Palette {
    Standard,
    Monochrome,
}

struct Colors {
    background: &'static str,
    pavement: &'static str,
    island: &'static str,
    ring: &'static str,
    ink: &'static str,
    v1: &'static str,
    v2: &'static str,
    damage: &'static str,
    impact: &'static str,
    info_fill: &'static str,
}

impl Palette {
    fn colors(self) -> Colors {
        match self {
            Palette::Standard => Colors {
                background: "#ffffff",
                pavement: "#d9d9d9",
                island: "#8fc98f",
                ring: "#ffffff",
                ink: "#202020",
                v1: "#1f5fbf",
                v2: "#c0392b",
                damage: "#f39c12",
                impact: "#e74c3c",
                info_fill: "#fdfdf5",
            },
            Palette::Monochrome => Colors {
                background: "#ffffff",
                pavement: "#e0e0e0",
                island: "#a0a0a0",
                ring: "#ffffff",
                ink: "#000000",
                v1: "#404040",
                v2: "#707070",
                damage: "#000000",
                impact: "#000000",
                info_fill: "#ffffff",
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    /// Pixels per foot.
    pub scale: f64,
    pub margin_ft: f64,
    pub palette: Palette,
    pub embed_annotation: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            scale: 4.0,
            margin_ft: 10.0,
            palette: Palette::Standard,
            embed_annotation: true,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(SceneError::InvalidOptions("scale must be positive".into()));
        }
        if !(self.margin_ft.is_finite() && self.margin_ft >= 0.0) {
            return Err(SceneError::InvalidOptions("margin must be non-negative".into()));
        }
        Ok(())
    }
}

/// Characters per wrapped line of the info-box narrative.
const INFO_WRAP_CHARS: usize = 52;

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

struct Canvas {
    half_ft: f64,
    scale: f64,
    out: String,
}

impl Canvas {
    fn x(&self, p: Point) -> String {
        num((p.x + self.half_ft) * self.scale)
    }

    fn y(&self, p: Point) -> String {
        num((self.half_ft - p.y) * self.scale)
    }

    fn px(&self, ft: f64) -> String {
        num(ft * self.scale)
    }

    fn points(&self, pts: &[Point]) -> String {
        let mut s = String::new();
        for (i, p) in pts.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&self.x(*p));
            s.push(',');
            s.push_str(&self.y(*p));
        }
        s
    }

    fn line(&mut self, s: &str) {
        self.out.push_str(s);
        self.out.push('\n');
    }
}

fn arrow_head(pose: Pose, length_ft: f64) -> [Point; 3] {
    let fwd = Point::heading_unit(pose.heading_deg);
    let left = Point::new(-fwd.y, fwd.x);
    let p = pose.position;
    [
        p + fwd * length_ft,
        p - fwd * (length_ft / 3.0) + left * (length_ft / 2.0),
        p - fwd * (length_ft / 3.0) - left * (length_ft / 2.0),
    ]
}

fn star(center: Point, outer: f64, inner: f64) -> Vec<Point> {
    (0..10)
        .map(|k| {
            let r = if k % 2 == 0 { outer } else { inner };
            center + Point::polar(r, f64::from(k) * 36.0)
        })
        .collect()
}

fn wrap(text: &str, width: usize) -> Vec<String> {
    let mut lines = Vec::new();
    let mut current = String::new();
    for word in text.split_whitespace() {
        if !current.is_empty() && current.chars().count() + 1 + word.chars().count() > width {
            lines.push(core::mem::take(&mut current));
        }
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(word);
    }
    if !current.is_empty() {
        lines.push(current);
    }
    lines
}

/// Deterministic SVG 1.1 rendering: fixed element order, two-decimal
/// coordinates, no environment input.
pub fn render_svg(scene: &SceneGraph, opts: &RenderOptions) -> Result<Vec<u8>, SceneError> {
    opts.validate()?;
    let tpl = &scene.template_ref;
    let colors = opts.palette.colors();
    let half_ft = tpl.extent() + opts.margin_ft;
    let size = num(2.0 * half_ft * opts.scale);
    let mut c = Canvas {
        half_ft,
        scale: opts.scale,
        out: String::new(),
    };

    c.line(r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    c.line(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    ));
    if opts.embed_annotation {
        c.line(&format!(
            r#"<metadata id="{ANNOTATION_ID}">{}</metadata>"#,
            xml_escape(&canonical_json(scene))
        ));
    }
    c.line(&format!(
        r#"<rect class="background" x="0.00" y="0.00" width="{size}" height="{size}" fill="{}"/>"#,
        colors.background
    ));

    c.line(r#"<g id="roadway">"#);
    for leg in &tpl.legs {
        let axis = Point::heading_unit(leg.bearing_deg);
        let side = Point::new(-axis.y, axis.x) * tpl.corridor_half_width();
        let (near, far) = (axis * tpl.island_radius, axis * tpl.extent());
        let pts = c.points(&[near + side, far + side, far - side, near - side]);
        c.line(&format!(
            r#"<polygon class="leg-corridor" data-leg="{}" points="{pts}" fill="{}"/>"#,
            leg.position, colors.pavement
        ));
    }
    let origin = Point::ORIGIN;
    c.line(&format!(
        r#"<circle class="circulatory-roadway" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
        c.x(origin),
        c.y(origin),
        c.px(tpl.outer_radius()),
        colors.pavement
    ));
    for k in 1..=tpl.num_circulating_lanes {
        let r = tpl.island_radius + f64::from(k) * tpl.lane_width;
        c.line(&format!(
            r#"<circle class="lane-ring" cx="{}" cy="{}" r="{}" fill="none" stroke="{}" stroke-width="2.00" stroke-dasharray="12.00 8.00"/>"#,
            c.x(origin),
            c.y(origin),
            c.px(r),
            colors.ring
        ));
    }
    c.line(&format!(
        r#"<circle class="island" cx="{}" cy="{}" r="{}" fill="{}" stroke="{}" stroke-width="1.00"/>"#,
        c.x(origin),
        c.y(origin),
        c.px(tpl.island_radius),
        colors.island,
        colors.ink
    ));
    c.line("</g>");

    let tint = |label: VehicleLabel| match label {
        VehicleLabel::V1 => colors.v1,
        VehicleLabel::V2 => colors.v2,
    };

    if !scene.paths.is_empty() {
        c.line(r#"<g id="paths">"#);
        for path in &scene.paths {
            let color = tint(path.label);
            let pts = c.points(&path.points);
            c.line(&format!(
                r#"<polyline class="path" data-label="{}" points="{pts}" fill="none" stroke="{color}" stroke-width="2.00"/>"#,
                path.label
            ));
            for (class, pose) in [("entry-arrow", path.entry_arrow), ("exit-arrow", path.exit_arrow)] {
                let pts = c.points(&arrow_head(pose, 6.0));
                c.line(&format!(
                    r#"<polygon class="{class}" data-label="{}" points="{pts}" fill="{color}"/>"#,
                    path.label
                ));
            }
        }
        c.line("</g>");
    }

    if !scene.vehicles.is_empty() {
        c.line(r#"<g id="vehicles">"#);
        for glyph in &scene.vehicles {
            let pts = c.points(&glyph.polygon());
            c.line(&format!(
                r#"<polygon class="vehicle" data-label="{}" points="{pts}" fill="{}" fill-opacity="0.85" stroke="{}" stroke-width="1.00"/>"#,
                glyph.label,
                tint(glyph.label),
                colors.ink
            ));
            let m = glyph.damage_marker_world();
            c.line(&format!(
                r#"<circle class="damage-marker" data-label="{}" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
                glyph.label,
                c.x(m),
                c.y(m),
                c.px(1.2),
                colors.damage
            ));
        }
        c.line("</g>");
    }

    if let Some(p) = scene.impact_marker {
        let pts = c.points(&star(p, 4.0, 1.6));
        c.line(&format!(
            r#"<polygon class="impact-marker" points="{pts}" fill="{}" stroke="{}" stroke-width="0.50"/>"#,
            colors.impact, colors.ink
        ));
    }

    let font = c.px(3.0);
    c.line(&format!(
        r#"<g id="labels" font-family="sans-serif" font-size="{font}" fill="{}" text-anchor="middle">"#,
        colors.ink
    ));
    for label in &scene.labels {
        c.line(&format!(
            r#"<text class="label" x="{}" y="{}">{}</text>"#,
            c.x(label.anchor),
            c.y(label.anchor),
            xml_escape(&label.text)
        ));
    }
    c.line("</g>");

    if let Some(info) = &scene.info_box {
        let mut lines = alloc::vec![
            format!("Collision Type: {}", info.collision_type),
            format!("V1 Damage Code: {}", info.v1_code),
            format!("V2 Damage Code: {}", info.v2_code),
            String::from("Narrative Summary:"),
        ];
        lines.extend(wrap(&info.narrative_summary, INFO_WRAP_CHARS));
        let line_ft = 3.9;
        let pad_ft = 2.0;
        let box_w = 95.0;
        let box_h = line_ft * lines.len() as f64 + 2.0 * pad_ft;
        let left = -half_ft + opts.margin_ft;
        let bottom = -half_ft + opts.margin_ft;
        let top_left = Point::new(left, bottom + box_h);
        c.line(&format!(
            r#"<g id="info-box" font-family="sans-serif" font-size="{font}" fill="{}">"#,
            colors.ink
        ));
        c.line(&format!(
            r#"<rect class="info-box" x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="{}" stroke-width="1.00"/>"#,
            c.x(top_left),
            c.y(top_left),
            c.px(box_w),
            c.px(box_h),
            colors.info_fill,
            colors.ink
        ));
        for (i, text) in lines.iter().enumerate() {
            let at = Point::new(left + pad_ft, bottom + box_h - pad_ft - line_ft * (i as f64 + 0.8));
            let _ = writeln!(
                c.out,
                "<text class=\"info-line\" x=\"{}\" y=\"{}\">{}</text>",
                c.x(at),
                c.y(at),
                xml_escape(text)
            );
        }
        c.line("</g>");
    }

    c.line("</svg>");
    Ok(c.out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::standard_template;
    use crate::record::fixtures::sample_record;
    use crate::scene::{build_scene, parse_scene};

    fn count(svg: &str, needle: &str) -> usize {
        svg.matches(needle).count()
    }

    #[test]
    fn empty_scene_draws_two_rings_and_four_corridors() {
        let scene = SceneGraph::empty(&standard_template());
        let svg = String::from_utf8(render_svg(&scene, &RenderOptions::default()).unwrap()).unwrap();
        assert_eq!(count(&svg, r#"class="lane-ring""#), 2);
        assert_eq!(count(&svg, r#"class="leg-corridor""#), 4);
        assert_eq!(count(&svg, r#"class="vehicle""#), 0);
        assert!(svg.contains("Dunning Street"));
    }

    #[test]
    fn rendering_is_byte_stable_and_round_trips() {
        let scene = build_scene(&sample_record(), &standard_template()).unwrap();
        let a = render_svg(&scene, &RenderOptions::default()).unwrap();
        let b = render_svg(&scene, &RenderOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_scene(&a).unwrap(), scene);
        let svg = core::str::from_utf8(&a).unwrap();
        assert_eq!(count(svg, r#"class="vehicle""#), 2);
        assert_eq!(count(svg, r#"class="impact-marker""#), 1);
        assert!(svg.contains("V1 Damage Code: 2"));
    }

    #[test]
    fn annotation_is_optional() {
        let scene = build_scene(&sample_record(), &standard_template()).unwrap();
        let opts = RenderOptions {
            embed_annotation: false,
            ..RenderOptions::default()
        };
        let svg = render_svg(&scene, &opts).unwrap();
        assert_eq!(parse_scene(&svg), Err(SceneError::MissingAnnotation));
    }

    #[test]
    fn foreign_inputs_are_rejected() {
        let png = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];
        assert_eq!(parse_scene(&png), Err(SceneError::MissingAnnotation));
        let truncated = br#"<svg><metadata id="crashviz-scene">{"case_id":"x","templ</metadata></svg>"#;
        assert!(matches!(
            parse_scene(truncated),
            Err(SceneError::MalformedAnnotation(_))
        ));
    }

    #[test]
    fn zero_scale_is_rejected() {
        let scene = SceneGraph::empty(&standard_template());
        let opts = RenderOptions {
            scale: 0.0,
            ..RenderOptions::default()
        };
        assert!(matches!(render_svg(&scene, &opts), Err(SceneError::InvalidOptions(_))));
    }

    #[test]
    fn wrap_respects_width() {
        let lines = wrap("one two three four five six seven", 9);
        assert!(lines.iter().all(|l| l.chars().count() <= 9));
        assert_eq!(lines.join(" "), "one two three four five six seven");
    }
}
