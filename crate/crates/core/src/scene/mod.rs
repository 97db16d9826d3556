//! The crash diagram as a scene graph, built deterministically from a record
//! and a template, plus its SVG form.

mod annotation;
mod svg;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    compute_impact, compute_trajectory, island_clearance, zone_centroid, Footprint,
    GeometryError, GeometryTemplate, Point, Pose, Trajectory,
};
use crate::math::q2;
use crate::record::{validate_record, CrashRecord, VehicleLabel};

pub use annotation::{canonical_json, parse_scene, ANNOTATION_ID};
pub use svg::{render_svg, Palette, RenderOptions};

/// Longest narrative kept in the info box, in characters.
pub const NARRATIVE_SUMMARY_CHARS: usize = 280;
/// Distance from a glyph center to its label anchor.
pub const LABEL_OFFSET_FT: f64 = 7.0;
/// Required gap between a footprint and the island edge.
const ISLAND_CLEARANCE_FT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("damage code {0} is non-localized; no impact zone to draw")]
    NonLocalizedCode(u8),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("invalid render options: {0}")]
    InvalidOptions(String),
    #[error("no scene annotation found; score this image through the human channel")]
    MissingAnnotation,
    #[error("malformed scene annotation: {0}")]
    MalformedAnnotation(String),
}

impl From<GeometryError> for SceneError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::NonLocalizedCode(c) => SceneError::NonLocalizedCode(c),
            GeometryError::InvalidTemplate(m) => SceneError::InvalidTemplate(m),
            other => SceneError::InvalidRecord(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleGlyph {
    pub label: VehicleLabel,
    pub pose: Pose,
    pub footprint: Footprint,
    /// Damage marker in the body frame, as fractions of the footprint.
    pub damage_marker: Point,
}

impl VehicleGlyph {
    pub fn polygon(&self) -> [Point; 4] {
        self.footprint.polygon(self.pose)
    }

    pub fn damage_marker_world(&self) -> Point {
        self.pose.position + self.footprint.scale(self.damage_marker).body_to_world(self.pose.heading_deg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathElement {
    pub label: VehicleLabel,
    pub points: Vec<Point>,
    pub entry_arrow: Pose,
    pub exit_arrow: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoBox {
    pub collision_type: String,
    pub v1_code: u8,
    pub v2_code: u8,
    pub narrative_summary: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub text: String,
    pub anchor: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub case_id: String,
    pub template_ref: GeometryTemplate,
    pub vehicles: Vec<VehicleGlyph>,
    pub paths: Vec<PathElement>,
    pub impact_marker: Option<Point>,
    pub info_box: Option<InfoBox>,
    pub labels: Vec<Label>,
    /// Full narrative; the info box carries the truncated summary.
    pub narrative: String,
}

impl SceneGraph {
    /// Roadway only: the base layout image.
    pub fn empty(template: &GeometryTemplate) -> Self {
        SceneGraph {
            case_id: String::new(),
            template_ref: template.clone(),
            vehicles: Vec::new(),
            paths: Vec::new(),
            impact_marker: None,
            info_box: None,
            labels: road_labels(template),
            narrative: String::new(),
        }
    }

    pub fn vehicle(&self, label: VehicleLabel) -> Option<&VehicleGlyph> {
        self.vehicles.iter().find(|v| v.label == label)
    }

    pub fn label(&self, text: &str) -> Option<&Label> {
        self.labels
            .iter()
            .find(|l| l.text.trim().eq_ignore_ascii_case(text))
    }

    /// Scene invariants: complete info box, glyphs on the roadway and clear
    /// of the island, and each vehicle label near its glyph.
    pub fn check_invariants(&self, template: &GeometryTemplate) -> Result<(), String> {
        if self.info_box.is_none() {
            return Err("info box missing".into());
        }
        for glyph in &self.vehicles {
            if !template.is_drivable(glyph.pose.position) {
                return Err(format!("{} glyph off the roadway", glyph.label));
            }
            if island_clearance(&glyph.polygon()) < template.island_radius {
                return Err(format!("{} glyph overlaps the central island", glyph.label));
            }
            match self.label(glyph.label.as_str()) {
                Some(l) if l.anchor.dist(glyph.pose.position) <= 10.0 => {}
                _ => return Err(format!("{} label not anchored to its glyph", glyph.label)),
            }
        }
        Ok(())
    }
}

/// Cuts at the last whitespace that keeps the text within `max_chars`.
pub fn summarize_narrative(narrative: &str, max_chars: usize) -> String {
    let text = narrative.trim();
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let cut = text
        .char_indices()
        .nth(max_chars)
        .map_or(text.len(), |(i, _)| i);
    let head = &text[..cut];
    let head = match head.rfind(char::is_whitespace) {
        Some(i) if i > 0 => &head[..i],
        _ => head,
    };
    head.trim_end().to_string()
}

fn road_labels(template: &GeometryTemplate) -> Vec<Label> {
    template
        .legs
        .iter()
        .map(|leg| {
            let axis = Point::heading_unit(leg.bearing_deg);
            let left_of_axis = Point::new(-axis.y, axis.x);
            let along = template.outer_radius() + 0.7 * template.leg_length;
            let lateral = -(template.corridor_half_width() + 6.0);
            Label {
                text: leg.road_name.clone(),
                anchor: quantize_point(axis * along + left_of_axis * lateral),
            }
        })
        .collect()
}

/// Deterministic reference diagram for a record.
pub fn build_scene(record: &CrashRecord, template: &GeometryTemplate) -> Result<SceneGraph, SceneError> {
    template.validate()?;
    let report = validate_record(record);
    if let Some(err) = report
        .findings
        .iter()
        .find(|f| f.severity == crate::record::Severity::Error)
    {
        return Err(SceneError::InvalidRecord(format!("{}: {}", err.field, err.message)));
    }
    let (v1, v2) = (record.v1(), record.v2());
    for code in [v1.damage_code, v2.damage_code] {
        if !code.is_localized() {
            return Err(SceneError::NonLocalizedCode(code.get()));
        }
    }

    let t1 = compute_trajectory(v1, template);
    let t2 = compute_trajectory(v2, template);
    let impact = compute_impact(&t1, &t2, v1.damage_code, v2.damage_code)?;
    let max_gap = 2.0 * template.lane_width;
    if impact.residual > max_gap {
        return Err(SceneError::InvalidRecord(format!(
            "vehicle paths never come within {max_gap} ft of each other"
        )));
    }

    let footprint = Footprint::default();
    let place = |label, pose: Pose, code| -> Result<VehicleGlyph, SceneError> {
        let marker = zone_centroid(code)?;
        let offset = footprint.scale(marker).body_to_world(pose.heading_deg);
        Ok(VehicleGlyph {
            label,
            pose: Pose {
                position: impact.point - offset,
                heading_deg: pose.heading_deg,
            },
            footprint,
            damage_marker: marker,
        })
    };
    let mut point = impact.point;
    let mut glyphs = [
        place(VehicleLabel::V1, impact.v1_pose, v1.damage_code)?,
        place(VehicleLabel::V2, impact.v2_pose, v2.damage_code)?,
    ];

    // Slide the whole contact outward until both bodies clear the island.
    for _ in 0..32 {
        let clearance = glyphs
            .iter()
            .map(|g| island_clearance(&g.polygon()))
            .fold(f64::INFINITY, f64::min);
        let deficit = template.island_radius + ISLAND_CLEARANCE_FT - clearance;
        if deficit <= 0.0 {
            break;
        }
        let outward = point.normalized().unwrap_or(Point::new(0.0, 1.0));
        let shift = outward * (deficit + 0.01);
        point = point + shift;
        for g in &mut glyphs {
            g.pose.position = g.pose.position + shift;
        }
    }

    for g in &mut glyphs {
        g.pose = quantize_pose(g.pose);
        g.damage_marker = quantize_point(g.damage_marker);
    }
    let point = quantize_point(point);

    let mut labels = Vec::with_capacity(6);
    let (c1, c2) = (glyphs[0].pose.position, glyphs[1].pose.position);
    let apart = (c1 - c2)
        .normalized()
        .or_else(|| c1.normalized())
        .unwrap_or(Point::new(0.0, 1.0));
    labels.push(Label {
        text: VehicleLabel::V1.as_str().into(),
        anchor: quantize_point(c1 + apart * LABEL_OFFSET_FT),
    });
    labels.push(Label {
        text: VehicleLabel::V2.as_str().into(),
        anchor: quantize_point(c2 - apart * LABEL_OFFSET_FT),
    });
    labels.extend(road_labels(template));

    let scene = SceneGraph {
        case_id: record.case_id.clone(),
        template_ref: template.clone(),
        vehicles: glyphs.to_vec(),
        paths: alloc::vec![
            path_element(VehicleLabel::V1, &t1),
            path_element(VehicleLabel::V2, &t2)
        ],
        impact_marker: Some(point),
        info_box: Some(InfoBox {
            collision_type: record.collision_type.label().to_string(),
            v1_code: v1.damage_code.get(),
            v2_code: v2.damage_code.get(),
            narrative_summary: summarize_narrative(&record.narrative, NARRATIVE_SUMMARY_CHARS),
        }),
        labels,
        narrative: record.narrative.clone(),
    };
    scene
        .check_invariants(template)
        .map_err(SceneError::InvalidRecord)?;
    Ok(scene)
}

fn path_element(label: VehicleLabel, t: &Trajectory) -> PathElement {
    let pose_at = |i: usize| {
        quantize_pose(Pose {
            position: t.points[i],
            heading_deg: t.headings[i],
        })
    };
    PathElement {
        label,
        points: t.points.iter().copied().map(quantize_point).collect(),
        entry_arrow: pose_at(0),
        exit_arrow: pose_at(t.len() - 1),
    }
}

fn quantize_point(p: Point) -> Point {
    Point::new(q2(p.x), q2(p.y))
}

fn quantize_pose(p: Pose) -> Pose {
    Pose {
        position: quantize_point(p.position),
        heading_deg: q2(p.heading_deg),
    }
}
