//! Seeded synthetic crash records for offline runs and tests.

use std::collections::BTreeMap;

use crashviz_core::geometry::TurnMovement;
use crashviz_core::{
    build_scene, classify_movement, CollisionType, Compass, CrashRecord, DamageCode, GeometryTemplate,
    VehicleLabel, VehicleRecord,
};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

pub const DEFAULT_CASES: usize = 79;
pub const DEFAULT_SEED: u64 = 0x006d_616c_7461;

const WEATHER: [&str; 4] = ["clear", "cloudy", "rain", "snow"];
const LIGHTING: [&str; 3] = ["daylight", "dusk", "dark - lighted roadway"];
const SURFACE: [&str; 3] = ["dry", "wet", "snow/ice"];

fn heading(entry: Compass) -> &'static str {
    match entry {
        Compass::North => "southbound",
        Compass::East => "westbound",
        Compass::South => "northbound",
        Compass::West => "eastbound",
    }
}

fn maneuver(m: TurnMovement) -> &'static str {
    match m {
        TurnMovement::RightTurn => "turning right",
        TurnMovement::Through => "continuing straight through",
        TurnMovement::LeftTurn => "turning left",
        TurnMovement::UTurn => "making a U-turn",
    }
}

fn action(m: TurnMovement) -> &'static str {
    match m {
        TurnMovement::RightTurn => "turning right",
        TurnMovement::Through => "going straight",
        TurnMovement::LeftTurn => "turning left",
        TurnMovement::UTurn => "making U-turn",
    }
}

fn narrative(v1: &VehicleRecord, v2: &VehicleRecord, t: &GeometryTemplate, kind: &CollisionType) -> String {
    let describe = |v: &VehicleRecord| {
        format!(
            "{} was traveling {} on {} {} toward {}",
            v.label.as_str(),
            heading(v.entry_leg),
            t.road_name(v.entry_leg),
            maneuver(classify_movement(v.entry_leg, v.exit_leg)),
            t.road_name(v.exit_leg),
        )
    };
    format!(
        "{}. {}. {} failed to yield inside the roundabout and the vehicles collided ({}). \
         {} sustained damage to area {} and {} to area {}.",
        describe(v1),
        describe(v2),
        v1.label.as_str(),
        kind.label().to_lowercase(),
        v1.label.as_str(),
        v1.damage_code.get(),
        v2.label.as_str(),
        v2.damage_code.get(),
    )
}

/// `count` records that all produce a diagram under `template`, named
/// `case-001`, `case-002`, ...
pub fn synthetic_corpus(count: usize, seed: u64, template: &GeometryTemplate) -> Vec<CrashRecord> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let kind = CollisionType::NAMED[out.len() % CollisionType::NAMED.len()].clone();
        let mut vehicle = |label| {
            let entry_leg = *Compass::ALL.choose(&mut rng).unwrap_or(&Compass::North);
            let exit_leg = *Compass::ALL.choose(&mut rng).unwrap_or(&Compass::North);
            VehicleRecord {
                label,
                entry_leg,
                exit_leg,
                damage_code: DamageCode::new(rng.random_range(1..=13)).expect("localized range"),
                pre_impact_action: Some(action(classify_movement(entry_leg, exit_leg)).into()),
            }
        };
        let v1 = vehicle(VehicleLabel::V1);
        let v2 = vehicle(VehicleLabel::V2);
        let mut conditions = BTreeMap::new();
        conditions.insert("weather".into(), WEATHER[rng.random_range(0..WEATHER.len())].into());
        conditions.insert("lighting".into(), LIGHTING[rng.random_range(0..LIGHTING.len())].into());
        conditions.insert("surface".into(), SURFACE[rng.random_range(0..SURFACE.len())].into());
        let record = CrashRecord {
            case_id: format!("case-{:03}", out.len() + 1),
            location: "US 9 / NY 67 roundabout, Malta NY".into(),
            narrative: narrative(&v1, &v2, template, &kind),
            collision_type: kind,
            vehicles: [v1, v2],
            conditions,
            report_image_ref: None,
        };
        if build_scene(&record, template).is_ok() {
            out.push(record);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crashviz_core::{standard_template, validate_record};

    #[test]
    fn corpus_is_deterministic_and_buildable() {
        let t = standard_template();
        let a = synthetic_corpus(DEFAULT_CASES, DEFAULT_SEED, &t);
        assert_eq!(a, synthetic_corpus(DEFAULT_CASES, DEFAULT_SEED, &t));
        assert_eq!(a.len(), 79);
        assert_eq!(a[78].case_id, "case-079");
        for r in &a {
            assert!(!validate_record(r).has_errors(), "{}", r.case_id);
        }
    }
}
