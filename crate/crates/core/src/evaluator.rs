//! Ten-metric binary rubric: automatic scoring of annotated scenes and
//! two-rater consensus for human sheets.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{body_zone, island_clearance, quadrant_of, zone_centroid, GeometryTemplate, Point};
use crate::math::{abs, acos_deg};
use crate::record::{normalize_label, CrashRecord, DamageCode, VehicleLabel};
use crate::scene::{build_scene, SceneGraph, VehicleGlyph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricId {
    CollisionTypeExtraction,
    LabelV1,
    LabelV2,
    CollisionLocation,
    CollisionPointAccuracy,
    V1CodeExtraction,
    V1CodeVisual,
    V2CodeExtraction,
    V2CodeVisual,
    ClarityProportion,
}

impl MetricId {
    pub const ALL: [MetricId; 10] = [
        MetricId::CollisionTypeExtraction,
        MetricId::LabelV1,
        MetricId::LabelV2,
        MetricId::CollisionLocation,
        MetricId::CollisionPointAccuracy,
        MetricId::V1CodeExtraction,
        MetricId::V1CodeVisual,
        MetricId::V2CodeExtraction,
        MetricId::V2CodeVisual,
        MetricId::ClarityProportion,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 1-based column number (`m1`..`m10`).
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(n: usize) -> Option<Self> {
        n.checked_sub(1).and_then(|i| Self::ALL.get(i).copied())
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricId::CollisionTypeExtraction => "Collision Type Extraction",
            MetricId::LabelV1 => "Vehicle Labeling\u{2013}V1",
            MetricId::LabelV2 => "Vehicle Labeling\u{2013}V2",
            MetricId::CollisionLocation => "Collision Location",
            MetricId::CollisionPointAccuracy => "Collision Point Accuracy",
            MetricId::V1CodeExtraction => "V1 Damage Code\u{2013}Extraction Accuracy",
            MetricId::V1CodeVisual => "V1 Damage Code\u{2013}Visual Consistency",
            MetricId::V2CodeExtraction => "V2 Damage Code\u{2013}Extraction Accuracy",
            MetricId::V2CodeVisual => "V2 Damage Code\u{2013}Visual Consistency",
            MetricId::ClarityProportion => "Overall Clarity and Proportion",
        }
    }

    /// Rubric description shown to raters.
    pub fn description(self) -> &'static str {
        match self {
            MetricId::CollisionTypeExtraction => "Correct collision type (e.g., rear-end, angle) is accurately extracted from the report and depicted in the diagram.",
            MetricId::LabelV1 => "Vehicle 1 is clearly labeled as \u{201c}V1\u{201d} in the crash diagram.",
            MetricId::LabelV2 => "Vehicle 2 is clearly labeled as \u{201c}V2\u{201d} in the crash diagram.",
            MetricId::CollisionLocation => "The crash is depicted in the correct quadrant or at the correct entry/exit point of the roundabout.",
            MetricId::CollisionPointAccuracy => "The exact spot of vehicle impact is accurately marked in the diagram.",
            MetricId::V1CodeExtraction => "The damage code for Vehicle 1 is accurately extracted from the crash report.",
            MetricId::V1CodeVisual => "The damage on Vehicle 1 is visually consistent with the extracted damage code (e.g., left front corner).",
            MetricId::V2CodeExtraction => "The damage code for Vehicle 2 is accurately extracted from the crash report.",
            MetricId::V2CodeVisual => "The damage on Vehicle 2 is visually consistent with the extracted damage code (e.g., right rear side).",
            MetricId::ClarityProportion => "The roundabout layout, lane markings, and vehicle illustrations are proportionate and clearly presented.",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Rater {
    Auto,
    Human(String),
    Consensus,
}

impl Rater {
    /// Column value in the score-sheet CSV.
    pub fn id(&self) -> &str {
        match self {
            Rater::Auto => "auto",
            Rater::Human(id) => id,
            Rater::Consensus => "consensus",
        }
    }

    pub fn from_id(id: &str) -> Self {
        match id.trim() {
            "auto" => Rater::Auto,
            "consensus" => Rater::Consensus,
            other => Rater::Human(other.to_string()),
        }
    }

    pub fn is_human(&self) -> bool {
        matches!(self, Rater::Human(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreSheet {
    pub case_id: String,
    pub model_id: String,
    pub rater: Rater,
    /// Indexed in `MetricId::ALL` order.
    pub scores: [bool; 10],
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<MetricId, String>,
}

impl ScoreSheet {
    pub fn new(case_id: &str, model_id: &str, rater: Rater) -> Self {
        Self {
            case_id: case_id.into(),
            model_id: model_id.into(),
            rater,
            scores: [false; 10],
            notes: BTreeMap::new(),
        }
    }

    pub fn score(&self, metric: MetricId) -> bool {
        self.scores[metric.index()]
    }

    pub fn set(&mut self, metric: MetricId, value: bool) {
        self.scores[metric.index()] = value;
    }

    pub fn total(&self) -> u32 {
        self.scores.iter().map(|&s| u32::from(s)).sum()
    }

    fn note(&mut self, metric: MetricId, text: impl Into<String>) {
        self.notes.insert(metric, text.into());
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub point_epsilon_ft: f64,
    pub label_delta_ft: f64,
    pub zone_angle_deg: f64,
    pub proportion_slack: f64,
    pub min_label_spacing_ft: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            point_epsilon_ft: 7.5,
            label_delta_ft: 10.0,
            zone_angle_deg: 45.0,
            proportion_slack: 0.10,
            min_label_spacing_ft: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvaluationError {
    #[error("truth record cannot be diagrammed: {0}")]
    InvalidTruth(String),
    #[error("sheets disagree on {field}: {a} vs {b}")]
    MismatchedCase { field: &'static str, a: String, b: String },
    #[error("consensus needs two human sheets")]
    NotHumanRated,
}

/// Scores a candidate scene against the record it was generated from.
///
/// Missing pieces score their metrics 0 with a note; a candidate with no
/// glyphs, no labels, no impact marker and no info box scores all zeros.
pub fn evaluate_auto(
    model_id: &str,
    candidate: &SceneGraph,
    truth: &CrashRecord,
    template: &GeometryTemplate,
    tol: &Tolerances,
) -> Result<ScoreSheet, EvaluationError> {
    let reference =
        build_scene(truth, template).map_err(|e| EvaluationError::InvalidTruth(e.to_string()))?;
    let mut sheet = ScoreSheet::new(&truth.case_id, model_id, Rater::Auto);

    if candidate.vehicles.is_empty()
        && candidate.labels.is_empty()
        && candidate.impact_marker.is_none()
        && candidate.info_box.is_none()
    {
        for m in MetricId::ALL {
            sheet.note(m, "structurally empty candidate");
        }
        return Ok(sheet);
    }

    match &candidate.info_box {
        Some(info) => {
            let scored = [
                (
                    MetricId::CollisionTypeExtraction,
                    normalize_label(&info.collision_type) == normalize_label(truth.collision_type.label()),
                ),
                (MetricId::V1CodeExtraction, info.v1_code == truth.v1().damage_code.get()),
                (MetricId::V2CodeExtraction, info.v2_code == truth.v2().damage_code.get()),
            ];
            for (m, ok) in scored {
                sheet.set(m, ok);
            }
        }
        None => {
            for m in [
                MetricId::CollisionTypeExtraction,
                MetricId::V1CodeExtraction,
                MetricId::V2CodeExtraction,
            ] {
                sheet.note(m, "info box missing");
            }
        }
    }

    for (metric, label) in [(MetricId::LabelV1, VehicleLabel::V1), (MetricId::LabelV2, VehicleLabel::V2)] {
        let ok = match (candidate.vehicle(label), candidate.label(label.as_str())) {
            (Some(glyph), Some(text)) => text.anchor.dist(glyph.pose.position) <= tol.label_delta_ft,
            (None, _) => {
                sheet.note(metric, "glyph missing");
                false
            }
            (_, None) => {
                sheet.note(metric, "label missing");
                false
            }
        };
        sheet.set(metric, ok);
    }

    // The reference scene always carries an impact marker.
    let truth_impact = reference.impact_marker.unwrap_or_default();
    match candidate.impact_marker {
        Some(p) => {
            sheet.set(
                MetricId::CollisionLocation,
                quadrant_of(p, template) == quadrant_of(truth_impact, template),
            );
            sheet.set(
                MetricId::CollisionPointAccuracy,
                p.dist(truth_impact) <= tol.point_epsilon_ft,
            );
        }
        None => {
            sheet.note(MetricId::CollisionLocation, "impact marker missing");
            sheet.note(MetricId::CollisionPointAccuracy, "impact marker missing");
        }
    }

    for (metric, label, code) in [
        (MetricId::V1CodeVisual, VehicleLabel::V1, truth.v1().damage_code),
        (MetricId::V2CodeVisual, VehicleLabel::V2, truth.v2().damage_code),
    ] {
        let ok = match candidate.vehicle(label) {
            Some(glyph) => damage_consistent(glyph, code, tol),
            None => {
                sheet.note(metric, "glyph missing");
                false
            }
        };
        sheet.set(metric, ok);
    }

    match clarity_failure(candidate, template, tol) {
        None => sheet.set(MetricId::ClarityProportion, true),
        Some(reason) => sheet.note(MetricId::ClarityProportion, reason),
    }
    Ok(sheet)
}

/// Angle test for perimeter zones, containment for the top/undercarriage.
fn damage_consistent(glyph: &VehicleGlyph, code: DamageCode, tol: &Tolerances) -> bool {
    let Ok(zone) = body_zone(code) else {
        return false;
    };
    let Ok(expected) = zone_centroid(code) else {
        return false;
    };
    if expected == Point::ORIGIN {
        return zone.contains(glyph.damage_marker);
    }
    let (a, b) = (glyph.footprint.scale(glyph.damage_marker), glyph.footprint.scale(expected));
    match (a.normalized(), b.normalized()) {
        (Some(a), Some(b)) => acos_deg(a.dot(b).clamp(-1.0, 1.0)) <= tol.zone_angle_deg,
        _ => false,
    }
}

fn clarity_failure(scene: &SceneGraph, template: &GeometryTemplate, tol: &Tolerances) -> Option<String> {
    if scene.vehicles.is_empty() {
        return Some("no vehicle glyphs".into());
    }
    for glyph in &scene.vehicles {
        if !template.is_drivable(glyph.pose.position) {
            return Some(format!("{} glyph off the roadway", glyph.label));
        }
        if island_clearance(&glyph.polygon()) < template.island_radius {
            return Some(format!("{} glyph overlaps the island", glyph.label));
        }
    }
    let drawn = &scene.template_ref;
    let within = |got: f64, want: f64| abs(got - want) <= tol.proportion_slack * want;
    if !within(drawn.island_radius, template.island_radius)
        || !within(drawn.outer_radius(), template.outer_radius())
    {
        return Some("ring radii out of proportion".into());
    }
    for (i, a) in scene.labels.iter().enumerate() {
        for b in &scene.labels[i + 1..] {
            if a.anchor.dist(b.anchor) < tol.min_label_spacing_ft {
                return Some(format!("labels {} and {} overlap", a.text, b.text));
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub metric: MetricId,
    pub a: bool,
    pub b: bool,
    pub resolution: Option<bool>,
    pub resolution_note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusSheet {
    pub case_id: String,
    pub model_id: String,
    pub raters: [String; 2],
    /// Agreed values; conflicted metrics hold rater A's value until resolved.
    pub scores: [bool; 10],
    pub conflicts: Vec<Conflict>,
}

impl ConsensusSheet {
    pub fn is_resolved(&self) -> bool {
        self.conflicts.iter().all(|c| c.resolution.is_some())
    }

    pub fn resolve(&mut self, metric: MetricId, value: bool, note: &str) -> bool {
        match self.conflicts.iter_mut().find(|c| c.metric == metric) {
            Some(c) => {
                c.resolution = Some(value);
                c.resolution_note = note.into();
                self.scores[metric.index()] = value;
                true
            }
            None => false,
        }
    }

    /// Only meaningful once every conflict is resolved.
    pub fn to_score_sheet(&self) -> ScoreSheet {
        let mut sheet = ScoreSheet::new(&self.case_id, &self.model_id, Rater::Consensus);
        sheet.scores = self.scores;
        for c in &self.conflicts {
            sheet.notes.insert(c.metric, c.resolution_note.clone());
        }
        sheet
    }
}

/// Copies agreements and lists disagreements without resolving them.
pub fn merge_ratings(a: &ScoreSheet, b: &ScoreSheet) -> Result<ConsensusSheet, EvaluationError> {
    if a.case_id != b.case_id {
        return Err(EvaluationError::MismatchedCase {
            field: "case_id",
            a: a.case_id.clone(),
            b: b.case_id.clone(),
        });
    }
    if a.model_id != b.model_id {
        return Err(EvaluationError::MismatchedCase {
            field: "model_id",
            a: a.model_id.clone(),
            b: b.model_id.clone(),
        });
    }
    if !a.rater.is_human() || !b.rater.is_human() {
        return Err(EvaluationError::NotHumanRated);
    }
    let conflicts = MetricId::ALL
        .into_iter()
        .filter(|m| a.score(*m) != b.score(*m))
        .map(|metric| Conflict {
            metric,
            a: a.score(metric),
            b: b.score(metric),
            resolution: None,
            resolution_note: String::new(),
        })
        .collect();
    Ok(ConsensusSheet {
        case_id: a.case_id.clone(),
        model_id: a.model_id.clone(),
        raters: [a.rater.id().into(), b.rater.id().into()],
        scores: a.scores,
        conflicts,
    })
}
