use crashviz_core::geometry::GeometryError;
use crashviz_core::GeometryTemplate;

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("malformed template document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] GeometryError),
}

pub fn parse_template(bytes: &[u8]) -> Result<GeometryTemplate, TemplateError> {
    let template: GeometryTemplate = serde_json::from_slice(bytes)?;
    template.validate()?;
    Ok(template)
}

pub fn serialize_template(template: &GeometryTemplate) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(template).unwrap_or_default();
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crashviz_core::standard_template;

    #[test]
    fn standard_template_round_trips_with_documented_keys() {
        let bytes = serialize_template(&standard_template());
        let text = String::from_utf8(bytes.clone()).unwrap();
        for key in [
            "island_radius_ft",
            "lane_width_ft",
            "lanes",
            "legs",
            "leg_length_ft",
            "entry_lane_width_ft",
            "bearing_deg",
            "road_name",
        ] {
            assert!(text.contains(&format!("\"{key}\"")), "{key}");
        }
        assert_eq!(parse_template(&bytes).unwrap(), standard_template());
    }

    #[test]
    fn three_legs_are_rejected() {
        let mut t = standard_template();
        t.legs.pop();
        let bytes = serde_json::to_vec(&t).unwrap();
        assert!(matches!(parse_template(&bytes), Err(TemplateError::Invalid(_))));
    }
}
