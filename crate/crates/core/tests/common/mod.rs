#![allow(dead_code)]

use crashviz_core::{CollisionType, Compass, CrashRecord, DamageCode, VehicleLabel, VehicleRecord};
use proptest::prelude::*;

pub fn compass() -> impl Strategy<Value = Compass> {
    prop::sample::select(Compass::ALL.to_vec())
}

pub fn localized_code() -> impl Strategy<Value = DamageCode> {
    (1i64..=13).prop_map(|c| DamageCode::new(c).unwrap())
}

pub fn collision_type() -> impl Strategy<Value = CollisionType> {
    prop::sample::select(CollisionType::NAMED.to_vec())
}

fn vehicle(label: VehicleLabel) -> impl Strategy<Value = VehicleRecord> {
    (compass(), compass(), localized_code()).prop_map(move |(entry_leg, exit_leg, damage_code)| {
        VehicleRecord {
            label,
            entry_leg,
            exit_leg,
            damage_code,
            pre_impact_action: None,
        }
    })
}

pub fn record() -> impl Strategy<Value = CrashRecord> {
    (
        "case-[0-9]{3}",
        collision_type(),
        vehicle(VehicleLabel::V1),
        vehicle(VehicleLabel::V2),
        "[A-Za-z0-9]{1,12}( [A-Za-z0-9,.]{1,12}){0,60}",
    )
        .prop_map(|(case_id, collision_type, v1, v2, narrative)| CrashRecord {
            case_id,
            location: "US 9 / NY 67 roundabout".into(),
            narrative,
            collision_type,
            vehicles: [v1, v2],
            conditions: Default::default(),
            report_image_ref: None,
        })
}
