//! Structured crash records and their vocabularies: damage codes, collision
//! types, approach positions and vehicle labels.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("damage code {0} is outside 1..=19")]
    InvalidDamageCode(i64),
    #[error("damage code {0} is non-localized and has no tabulated description")]
    UnsupportedCode(u8),
}

/// Box 1 point-of-impact code. Codes 1..=13 name a body zone, 14..=19 are
/// non-localized outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct DamageCode(u8);

const DAMAGE_DESCRIPTIONS: [&str; 13] = [
    "Left Front Corner",
    "Front Center",
    "Right Front Corner",
    "Right Front Fender",
    "Right Side Door",
    "Right Rear Fender",
    "Right Rear Light",
    "Rear Trunk Center",
    "Left Rear Light",
    "Left Rear Fender",
    "Left Side Door",
    "Left Front Fender",
    "Top or Undercarriage",
];

impl DamageCode {
    pub const MAX: u8 = 19;
    pub const MAX_LOCALIZED: u8 = 13;

    pub fn new(code: i64) -> Result<Self, RecordError> {
        if (1..=i64::from(Self::MAX)).contains(&code) {
            Ok(Self(code as u8))
        } else {
            Err(RecordError::InvalidDamageCode(code))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn is_localized(self) -> bool {
        self.0 <= Self::MAX_LOCALIZED
    }

    pub fn description(self) -> Result<&'static str, RecordError> {
        damage_code_description(self)
    }
}

impl TryFrom<u8> for DamageCode {
    type Error = RecordError;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        Self::new(i64::from(code))
    }
}

impl From<DamageCode> for u8 {
    fn from(code: DamageCode) -> u8 {
        code.0
    }
}

impl fmt::Display for DamageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Tabulated description for a localized code.
pub fn damage_code_description(code: DamageCode) -> Result<&'static str, RecordError> {
    if code.is_localized() {
        Ok(DAMAGE_DESCRIPTIONS[usize::from(code.0) - 1])
    } else {
        Err(RecordError::UnsupportedCode(code.0))
    }
}

/// Compass position of an approach leg (not the traffic heading).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Compass {
    North,
    East,
    South,
    West,
}

impl Compass {
    pub const ALL: [Compass; 4] = [Compass::North, Compass::East, Compass::South, Compass::West];

    /// Compass bearing of the leg from the roundabout center (N=0, E=90).
    pub fn bearing_deg(self) -> f64 {
        match self {
            Compass::North => 0.0,
            Compass::East => 90.0,
            Compass::South => 180.0,
            Compass::West => 270.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Compass::North => "North",
            Compass::East => "East",
            Compass::South => "South",
            Compass::West => "West",
        }
    }

    /// Case-insensitive; accepts the full name or its initial.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        Compass::ALL.into_iter().find(|c| {
            s.eq_ignore_ascii_case(c.name()) || s.eq_ignore_ascii_case(&c.name()[..1])
        })
    }
}

impl fmt::Display for Compass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One approach of the roundabout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproachLeg {
    pub position: Compass,
    pub road_name: String,
    pub bearing_deg: f64,
}

/// Collision classification. The eight named variants are the prompt's list;
/// anything else keeps its raw label.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CollisionType {
    RearEnd,
    Overtaking,
    RightTurn,
    LeftTurn,
    RightAngle,
    HeadOn,
    RightTurnVariation,
    Sideswipe,
    Other(String),
}

impl CollisionType {
    pub const NAMED: [CollisionType; 8] = [
        CollisionType::RearEnd,
        CollisionType::Overtaking,
        CollisionType::RightTurn,
        CollisionType::LeftTurn,
        CollisionType::RightAngle,
        CollisionType::HeadOn,
        CollisionType::RightTurnVariation,
        CollisionType::Sideswipe,
    ];

    pub fn label(&self) -> &str {
        match self {
            CollisionType::RearEnd => "Rear-End",
            CollisionType::Overtaking => "Overtaking",
            CollisionType::RightTurn => "Right Turn",
            CollisionType::LeftTurn => "Left Turn",
            CollisionType::RightAngle => "Right Angle",
            CollisionType::HeadOn => "Head-On",
            CollisionType::RightTurnVariation => "Right Turn (variation)",
            CollisionType::Sideswipe => "Sideswipe",
            CollisionType::Other(raw) => raw,
        }
    }

    /// Matches a named variant ignoring case, spaces, hyphens and
    /// punctuation; otherwise `Other` with the label as given.
    pub fn from_label(label: &str) -> Self {
        let key = normalize_label(label);
        Self::NAMED
            .into_iter()
            .find(|named| normalize_label(named.label()) == key)
            .unwrap_or_else(|| CollisionType::Other(label.to_string()))
    }

    pub fn is_named(&self) -> bool {
        !matches!(self, CollisionType::Other(_))
    }

    /// Case- and hyphen-insensitive comparison against free text.
    pub fn matches_label(&self, text: &str) -> bool {
        normalize_label(self.label()) == normalize_label(text)
    }
}

pub(crate) fn normalize_label(label: &str) -> String {
    label
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

impl fmt::Display for CollisionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for CollisionType {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for CollisionType {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let label = String::deserialize(deserializer)?;
        Ok(CollisionType::from_label(&label))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VehicleLabel {
    V1,
    V2,
}

impl VehicleLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleLabel::V1 => "V1",
            VehicleLabel::V2 => "V2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            t if t.eq_ignore_ascii_case("V1") => Some(VehicleLabel::V1),
            t if t.eq_ignore_ascii_case("V2") => Some(VehicleLabel::V2),
            _ => None,
        }
    }
}

impl fmt::Display for VehicleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub label: VehicleLabel,
    pub entry_leg: Compass,
    pub exit_leg: Compass,
    pub damage_code: DamageCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_impact_action: Option<String>,
}

/// A two-vehicle roundabout crash. `vehicles[0]` is V1 and `vehicles[1]` is
/// V2 for every record produced by the parser.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashRecord {
    pub case_id: String,
    pub location: String,
    pub narrative: String,
    pub collision_type: CollisionType,
    pub vehicles: [VehicleRecord; 2],
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub conditions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_image_ref: Option<String>,
}

impl CrashRecord {
    pub fn vehicle(&self, label: VehicleLabel) -> Option<&VehicleRecord> {
        self.vehicles.iter().find(|v| v.label == label)
    }

    pub fn v1(&self) -> &VehicleRecord {
        self.vehicle(VehicleLabel::V1).unwrap_or(&self.vehicles[0])
    }

    pub fn v2(&self) -> &VehicleRecord {
        self.vehicle(VehicleLabel::V2).unwrap_or(&self.vehicles[1])
    }

    pub fn has_distinct_labels(&self) -> bool {
        self.vehicles[0].label != self.vehicles[1].label
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    fn push(&mut self, severity: Severity, field: &str, message: impl Into<String>) {
        self.findings.push(Finding {
            severity,
            field: field.to_string(),
            message: message.into(),
        });
    }
}

/// Checks the dataset inclusion criteria. Errors mark a record that cannot be
/// diagrammed; warnings mark one that can, with reduced automatic scoring.
pub fn validate_record(record: &CrashRecord) -> ValidationReport {
    let mut report = ValidationReport::default();
    if record.case_id.trim().is_empty() {
        report.push(Severity::Error, "case_id", "case id missing");
    }
    if record.narrative.trim().is_empty() {
        report.push(Severity::Error, "narrative", "narrative description missing");
    }
    if !record.has_distinct_labels() {
        report.push(Severity::Error, "vehicles", "vehicles must be labeled V1 and V2");
    }
    match &record.collision_type {
        CollisionType::Other(raw) if raw.trim().is_empty() => {
            report.push(Severity::Error, "collision_type", "collision type missing");
        }
        CollisionType::Other(_) => {
            report.push(Severity::Warning, "collision_type", "non-standard collision type");
        }
        _ => {}
    }
    for (index, vehicle) in record.vehicles.iter().enumerate() {
        if !vehicle.damage_code.is_localized() {
            report.push(
                Severity::Warning,
                &format!("vehicles[{index}].damage_code"),
                "non-localized damage code: auto visual-consistency unavailable",
            );
        }
    }
    report
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// V1 enters from the East and leaves North with a front-center hit; V2
    /// circulates from the South to the North and is struck at the left rear.
    pub fn sample_record() -> CrashRecord {
        CrashRecord {
            case_id: "case-001".into(),
            location: "US 9 / NY 67 roundabout, Malta NY".into(),
            narrative: "V1 entered the roundabout from Dunning Street (eastbound) and failed to \
                        yield to V2 already circulating from US 9/US 7 (southbound)"
                .into(),
            collision_type: CollisionType::RightAngle,
            vehicles: [
                VehicleRecord {
                    label: VehicleLabel::V1,
                    entry_leg: Compass::East,
                    exit_leg: Compass::North,
                    damage_code: DamageCode::new(2).unwrap(),
                    pre_impact_action: Some("entering".into()),
                },
                VehicleRecord {
                    label: VehicleLabel::V2,
                    entry_leg: Compass::South,
                    exit_leg: Compass::North,
                    damage_code: DamageCode::new(9).unwrap(),
                    pre_impact_action: None,
                },
            ],
            conditions: BTreeMap::new(),
            report_image_ref: None,
        }
    }
}
