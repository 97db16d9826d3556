//! Targeted single-field corruptions of a scene, one per rubric metric.
//! Used to check that each metric responds to the field it covers.

use alloc::vec::Vec;

use crate::evaluator::MetricId;
use crate::geometry::{quadrant_of, GeometryTemplate, Point};
use crate::record::{CollisionType, VehicleLabel};
use crate::scene::SceneGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Corruption {
    /// Info box names a different collision type.
    CollisionType,
    DropLabel(VehicleLabel),
    /// Impact rotated 90 degrees about the center, into another quadrant.
    RotateImpact,
    /// Impact moved 10 ft without leaving its quadrant or leg.
    NudgeImpact,
    /// Info box reports a different code for the vehicle.
    InfoCode(VehicleLabel),
    /// Damage marker moved to the opposite side of the body.
    FlipMarker(VehicleLabel),
    /// Drawn island enlarged by half.
    ScaleIsland,
}

impl Corruption {
    /// The designated corruption for each metric, in metric order.
    pub const TARGETED: [(MetricId, Corruption); 10] = [
        (MetricId::CollisionTypeExtraction, Corruption::CollisionType),
        (MetricId::LabelV1, Corruption::DropLabel(VehicleLabel::V1)),
        (MetricId::LabelV2, Corruption::DropLabel(VehicleLabel::V2)),
        (MetricId::CollisionLocation, Corruption::RotateImpact),
        (MetricId::CollisionPointAccuracy, Corruption::NudgeImpact),
        (MetricId::V1CodeExtraction, Corruption::InfoCode(VehicleLabel::V1)),
        (MetricId::V1CodeVisual, Corruption::FlipMarker(VehicleLabel::V1)),
        (MetricId::V2CodeExtraction, Corruption::InfoCode(VehicleLabel::V2)),
        (MetricId::V2CodeVisual, Corruption::FlipMarker(VehicleLabel::V2)),
        (MetricId::ClarityProportion, Corruption::ScaleIsland),
    ];

    /// Metrics a corruption must zero on a self-consistent scene. A
    /// quarter-turn of the impact also moves it far beyond the point
    /// tolerance, so it flips the point metric too.
    pub fn expected_flips(self) -> Vec<MetricId> {
        match self {
            Corruption::CollisionType => alloc::vec![MetricId::CollisionTypeExtraction],
            Corruption::DropLabel(VehicleLabel::V1) => alloc::vec![MetricId::LabelV1],
            Corruption::DropLabel(VehicleLabel::V2) => alloc::vec![MetricId::LabelV2],
            Corruption::RotateImpact => {
                alloc::vec![MetricId::CollisionLocation, MetricId::CollisionPointAccuracy]
            }
            Corruption::NudgeImpact => alloc::vec![MetricId::CollisionPointAccuracy],
            Corruption::InfoCode(VehicleLabel::V1) => alloc::vec![MetricId::V1CodeExtraction],
            Corruption::InfoCode(VehicleLabel::V2) => alloc::vec![MetricId::V2CodeExtraction],
            Corruption::FlipMarker(VehicleLabel::V1) => alloc::vec![MetricId::V1CodeVisual],
            Corruption::FlipMarker(VehicleLabel::V2) => alloc::vec![MetricId::V2CodeVisual],
            Corruption::ScaleIsland => alloc::vec![MetricId::ClarityProportion],
        }
    }

    /// Applies the corruption; `None` when the scene lacks the field.
    pub fn apply(self, scene: &SceneGraph, template: &GeometryTemplate) -> Option<SceneGraph> {
        let mut s = scene.clone();
        match self {
            Corruption::CollisionType => {
                let info = s.info_box.as_mut()?;
                let current = CollisionType::from_label(&info.collision_type);
                let at = CollisionType::NAMED.iter().position(|c| *c == current).unwrap_or(0);
                let next = &CollisionType::NAMED[(at + 1) % CollisionType::NAMED.len()];
                info.collision_type = next.label().into();
            }
            Corruption::DropLabel(label) => {
                let before = s.labels.len();
                s.labels.retain(|l| !l.text.trim().eq_ignore_ascii_case(label.as_str()));
                if s.labels.len() == before {
                    return None;
                }
            }
            Corruption::RotateImpact => {
                let p = s.impact_marker?;
                s.impact_marker = Some(Point::new(-p.y, p.x));
            }
            Corruption::NudgeImpact => {
                let p = s.impact_marker?;
                let outward = p.normalized().unwrap_or(Point::new(0.0, 1.0));
                let along = Point::new(-outward.y, outward.x);
                let home = quadrant_of(p, template);
                let moved = [outward, -outward, along, -along]
                    .into_iter()
                    .map(|d| p + d * 10.0)
                    .find(|q| quadrant_of(*q, template) == home)?;
                s.impact_marker = Some(moved);
            }
            Corruption::InfoCode(label) => {
                let info = s.info_box.as_mut()?;
                let code = match label {
                    VehicleLabel::V1 => &mut info.v1_code,
                    VehicleLabel::V2 => &mut info.v2_code,
                };
                *code = *code % 13 + 1;
            }
            Corruption::FlipMarker(label) => {
                let glyph = s.vehicles.iter_mut().find(|g| g.label == label)?;
                glyph.damage_marker = if glyph.damage_marker == Point::ORIGIN {
                    Point::new(0.5, 0.0)
                } else {
                    -glyph.damage_marker
                };
            }
            Corruption::ScaleIsland => {
                s.template_ref.island_radius *= 1.5;
            }
        }
        Some(s)
    }
}
