//! Offline backend: draws the reference diagram for the case record.
//!
//! Params:
//! - `embed_annotation` (bool, default true): omit the scene metadata so
//!   only human rating can score the output.
//! - `corrupt_metrics` (array of metric numbers): apply each metric's
//!   targeted corruption before rendering.
//! - `palette`: `"monochrome"` for the greyscale palette.

use std::collections::BTreeMap;

use crashviz_core::perturb::Corruption;
use crashviz_core::scene::{Palette, SceneError};
use crashviz_core::{build_scene, render_svg, CrashRecord, GeometryTemplate, MetricId, RenderOptions};
use serde_json::Value;

use super::ClientError;

fn options(params: &BTreeMap<String, Value>) -> RenderOptions {
    let mut opts = RenderOptions::default();
    if let Some(embed) = params.get("embed_annotation").and_then(Value::as_bool) {
        opts.embed_annotation = embed;
    }
    if params.get("palette").and_then(Value::as_str) == Some("monochrome") {
        opts.palette = Palette::Monochrome;
    }
    opts
}

fn corruptions(params: &BTreeMap<String, Value>) -> Result<Vec<Corruption>, ClientError> {
    let Some(list) = params.get("corrupt_metrics") else {
        return Ok(Vec::new());
    };
    let bad = || ClientError::InvalidConfig("corrupt_metrics must list metric numbers 1..10".into());
    list.as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|v| {
            let metric = v
                .as_u64()
                .and_then(|n| MetricId::from_number(n as usize))
                .ok_or_else(bad)?;
            Ok(Corruption::TARGETED[metric.index()].1)
        })
        .collect()
}

pub fn mock_render(
    record: &CrashRecord,
    template: &GeometryTemplate,
    params: &BTreeMap<String, Value>,
) -> Result<Vec<u8>, ClientError> {
    let mut scene = build_scene(record, template).map_err(|e| match e {
        SceneError::NonLocalizedCode(_) | SceneError::InvalidRecord(_) => ClientError::BackendRejected {
            status: None,
            reason: e.to_string(),
        },
        other => ClientError::InvalidConfig(other.to_string()),
    })?;
    for c in corruptions(params)? {
        if let Some(s) = c.apply(&scene, template) {
            scene = s;
        }
    }
    render_svg(&scene, &options(params)).map_err(|e| ClientError::InvalidConfig(e.to_string()))
}
