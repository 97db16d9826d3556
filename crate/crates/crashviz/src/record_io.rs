//! Record documents: strict JSON parsing into `CrashRecord` and the inverse.

use std::collections::BTreeMap;

use crashviz_core::{CollisionType, Compass, CrashRecord, DamageCode, VehicleLabel, VehicleRecord};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordParseError {
    #[error("malformed record document: {0}")]
    MalformedDocument(String),
    #[error("schema violation at `{0}`")]
    SchemaViolation(String),
    #[error("both vehicles are labeled {0}")]
    DuplicateVehicleLabel(VehicleLabel),
}

impl RecordParseError {
    /// Offending field for schema violations.
    pub fn field(&self) -> Option<&str> {
        match self {
            RecordParseError::SchemaViolation(f) => Some(f),
            _ => None,
        }
    }
}

const TOP_LEVEL_KEYS: [&str; 7] = [
    "case_id",
    "location",
    "narrative",
    "collision_type",
    "vehicles",
    "conditions",
    "report_image_ref",
];
const VEHICLE_KEYS: [&str; 5] = ["label", "entry_leg", "exit_leg", "damage_code", "pre_impact_action"];

fn violation(field: impl Into<String>) -> RecordParseError {
    RecordParseError::SchemaViolation(field.into())
}

fn required_str<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, RecordParseError> {
    obj.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| violation(path))
}

fn optional_str(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Option<String>, RecordParseError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(violation(path)),
    }
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], prefix: &str) -> Result<(), RecordParseError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(violation(format!("{prefix}{k}"))),
        None => Ok(()),
    }
}

fn parse_vehicle(value: &Value, index: usize) -> Result<VehicleRecord, RecordParseError> {
    let prefix = format!("vehicles[{index}].");
    let path = |k: &str| format!("{prefix}{k}");
    let obj = value.as_object().ok_or_else(|| violation(format!("vehicles[{index}]")))?;
    reject_unknown(obj, &VEHICLE_KEYS, &prefix)?;
    let label = VehicleLabel::parse(required_str(obj, "label", &path("label"))?)
        .ok_or_else(|| violation(path("label")))?;
    let leg = |key: &str| -> Result<Compass, RecordParseError> {
        Compass::parse(required_str(obj, key, &path(key))?).ok_or_else(|| violation(path(key)))
    };
    let damage_code = obj
        .get("damage_code")
        .and_then(Value::as_i64)
        .and_then(|c| DamageCode::new(c).ok())
        .ok_or_else(|| violation(path("damage_code")))?;
    Ok(VehicleRecord {
        label,
        entry_leg: leg("entry_leg")?,
        exit_leg: leg("exit_leg")?,
        damage_code,
        pre_impact_action: optional_str(obj, "pre_impact_action", &path("pre_impact_action"))?,
    })
}

/// Parses one record document. Vehicles come back ordered V1, V2; every
/// key under `conditions` is kept, with non-string values stored as their
/// JSON text.
pub fn parse_record(bytes: &[u8]) -> Result<CrashRecord, RecordParseError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| RecordParseError::MalformedDocument(e.to_string()))?;
    record_from_value(&value)
}

pub fn record_from_value(value: &Value) -> Result<CrashRecord, RecordParseError> {
    let obj = value.as_object().ok_or_else(|| violation("record"))?;
    reject_unknown(obj, &TOP_LEVEL_KEYS, "")?;

    let case_id = required_str(obj, "case_id", "case_id")?;
    if case_id.trim().is_empty() {
        return Err(violation("case_id"));
    }
    let narrative = required_str(obj, "narrative", "narrative")?;
    if narrative.trim().is_empty() {
        return Err(violation("narrative"));
    }
    let location = required_str(obj, "location", "location")?;
    let collision_type = required_str(obj, "collision_type", "collision_type")?;
    if collision_type.trim().is_empty() {
        return Err(violation("collision_type"));
    }

    let vehicles = obj
        .get("vehicles")
        .and_then(Value::as_array)
        .filter(|v| v.len() == 2)
        .ok_or_else(|| violation("vehicles"))?;
    let mut pair = [parse_vehicle(&vehicles[0], 0)?, parse_vehicle(&vehicles[1], 1)?];
    if pair[0].label == pair[1].label {
        return Err(RecordParseError::DuplicateVehicleLabel(pair[0].label));
    }
    if pair[0].label == VehicleLabel::V2 {
        pair.swap(0, 1);
    }

    let mut conditions = BTreeMap::new();
    match obj.get("conditions") {
        None | Some(Value::Null) => {}
        Some(Value::Object(map)) => {
            for (k, v) in map {
                let text = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                conditions.insert(k.clone(), text);
            }
        }
        Some(_) => return Err(violation("conditions")),
    }

    Ok(CrashRecord {
        case_id: case_id.to_string(),
        location: location.to_string(),
        narrative: narrative.to_string(),
        collision_type: CollisionType::from_label(collision_type),
        vehicles: pair,
        conditions,
        report_image_ref: optional_str(obj, "report_image_ref", "report_image_ref")?,
    })
}

/// Pretty-printed record document; `parse_record` inverts it.
pub fn serialize_record(record: &CrashRecord) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(record).unwrap_or_default();
    out.push(b'\n');
    out
}

/// One slot per record in a batch file; bad entries stay in place so the
/// rest of the batch can proceed.
#[derive(Debug, Clone)]
pub enum RecordSlot {
    Valid(CrashRecord),
    Invalid { label: String, error: RecordParseError },
}

/// Accepts a single record object or an array of them.
pub fn parse_record_batch(bytes: &[u8]) -> Result<Vec<RecordSlot>, RecordParseError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| RecordParseError::MalformedDocument(e.to_string()))?;
    let items = match value {
        Value::Array(items) => items,
        single => vec![single],
    };
    Ok(items
        .iter()
        .enumerate()
        .map(|(i, item)| match record_from_value(item) {
            Ok(r) => RecordSlot::Valid(r),
            Err(error) => RecordSlot::Invalid {
                label: item
                    .get("case_id")
                    .and_then(Value::as_str)
                    .map_or_else(|| format!("#{}", i + 1), str::to_string),
                error,
            },
        })
        .collect())
}
