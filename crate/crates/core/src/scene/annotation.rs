use alloc::format;
use alloc::string::{String, ToString};

use serde_json::Value;

use super::{SceneError, SceneGraph};

pub const ANNOTATION_ID: &str = "crashviz-scene";

/// Scene JSON with sorted keys and every float printed to two decimals.
pub fn canonical_json(scene: &SceneGraph) -> String {
    let value = serde_json::to_value(scene).unwrap_or(Value::Null);
    let mut out = String::new();
    write_value(&value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64().filter(|_| !n.is_f64()) {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64().filter(|_| !n.is_f64()) {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format!("{:.2}", n.as_f64().unwrap_or(0.0)));
            }
        }
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: alloc::vec::Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(key, out);
                out.push(':');
                write_value(&map[key], out);
            }
            out.push('}');
        }
    }
}

fn write_string(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).unwrap_or_else(|_| "\"\"".into()));
}

pub(crate) fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn xml_unescape(s: &str) -> Result<String, SceneError> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        let semi = tail
            .find(';')
            .ok_or_else(|| SceneError::MalformedAnnotation("unterminated entity".into()))?;
        out.push(match &tail[..=semi] {
            "&amp;" => '&',
            "&lt;" => '<',
            "&gt;" => '>',
            "&quot;" => '"',
            "&apos;" => '\'',
            other => {
                return Err(SceneError::MalformedAnnotation(format!("unknown entity {other}")));
            }
        });
        rest = &tail[semi + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Recovers the scene from the annotation embedded by `render_svg`.
pub fn parse_scene(bytes: &[u8]) -> Result<SceneGraph, SceneError> {
    let text = core::str::from_utf8(bytes).map_err(|_| SceneError::MissingAnnotation)?;
    let open = format!("<metadata id=\"{ANNOTATION_ID}\">");
    let start = text.find(&open).ok_or(SceneError::MissingAnnotation)? + open.len();
    let len = text[start..]
        .find("</metadata>")
        .ok_or_else(|| SceneError::MalformedAnnotation("unterminated metadata element".into()))?;
    let json = xml_unescape(&text[start..start + len])?;
    serde_json::from_str(json.trim()).map_err(|e| SceneError::MalformedAnnotation(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escape_round_trip() {
        let s = "a < b && \"c\" > 'd'";
        assert_eq!(xml_unescape(&xml_escape(s)).unwrap(), s);
        assert!(xml_unescape("&bogus;").is_err());
    }

    #[test]
    fn numbers_print_fixed() {
        let mut out = String::new();
        write_value(&serde_json::json!({"b": 1.5, "a": [3, -0.126]}), &mut out);
        assert_eq!(out, r#"{"a":[3,-0.13],"b":1.50}"#);
    }
}
