//! The three-section diagram prompt and its attachment manifest.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::GeometryTemplate;
use crate::record::Compass;
use crate::scene::{render_svg, RenderOptions, SceneGraph};

pub const BASE_LAYOUT_REF: &str = "base_layout.svg";
pub const SVG_MEDIA_TYPE: &str = "image/svg+xml";

const INTRO: &[&str] = &[
    "You are provided with a traffic crash report and a standard roundabout layout. Your task is to extract key information and generate a standardized crash diagram that accurately represents the crash scenario on the roundabout.",
    "",
    "Roundabout Layout (Always Use This Configuration):",
];

/// Layout lines in prompt order; each names the leg at that compass position.
const LAYOUT_LINES: [(&str, Compass); 4] = [
    ("Northbound", Compass::North),
    ("Eastbound", Compass::East),
    ("Southbound", Compass::South),
    ("Westbound", Compass::West),
];

const REQUIREMENTS: &[&str] = &[
    "The roundabout has two circulating lanes.",
    "Vehicles must be shown on appropriate lanes within the roundabout (not the center).",
    "",
    "Crash Diagram Requirements:",
    "Place and label vehicles involved in the crash as V1 and V2.",
    "Show direction of travel and point of impact.",
    "Accurately depict entry and exit points for each vehicle.",
    "Include a clearly labeled information box in the bottom-left corner, showing:",
    "Collision Type (one of the nine standard types)",
    "V1 Damage Code (from \u{2018}Box 1\u{2013}Point of Impact\u{2019})",
    "V2 Damage Code (from \u{2018}Box 1\u{2013}Point of Impact\u{2019})",
    "Narrative Summary (a concise sequence of events describing the crash)",
    "",
];

const EXTRACTION: &[&str] = &[
    "From the Crash Report, Extract and Interpret:",
    "Location/Intersection Name",
    "Confirm the crash occurred at the roundabout.",
    "Identify all approach roads and confirm their orientations with the layout directions.",
    "",
    "Collision Type",
    "Classify the crash as one of the following types:",
    "Rear-End, Overtaking, Right Turn, Left Turn, Right Angle, Head-On, Right Turn (variation), Sideswipe",
    "",
    "Vehicle Movement and Positioning",
    "Determine where each vehicle entered and exited the roundabout.",
    "Show the correct movement path and trajectory within the roundabout.",
    "Ensure proper lane usage consistent with a two-lane roundabout.",
    "",
    "Narrative Summary",
    "Convert the crash narrative into a clear and concise chronological sequence.",
    "Example: \u{2018}V1 entered the roundabout from Dunning Street (eastbound) and failed to yield to V2 already circulating from US 9/US 7 (southbound)\u{2019}.",
    "",
    "Damage Codes",
    "Extract numeric damage codes (1\u{2013}13) from \u{2018}Box 1\u{2013}Point of Impact\u{2019} for both vehicles.",
    "Use the following guide to interpret the codes:",
];

/// Damage-code guide as worded in the prompt (glosses included).
pub const DAMAGE_GUIDE: [&str; 13] = [
    "1 = Left Front Corner (Driver's headlight)",
    "2 = Front Center (front bumper center)",
    "3 = Right Front Corner (Passenger headlight)",
    "4 = Right Front Fender",
    "5 = Right Side Door",
    "6 = Right Rear Fender",
    "7 = Right Rear Light",
    "8 = Rear Trunk Center",
    "9 = Left Rear Light",
    "10 = Left Rear Fender",
    "11 = Left Side Door",
    "12 = Left Front Fender",
    "13 = Roof / Hood / Trunk Top",
];

const FINAL_OUTPUT: &[&str] = &[
    "",
    "Final Output:",
    "A visually accurate roundabout crash diagram that shows:",
    "Proper road geometry and vehicle placements",
    "Entry/exit points and travel directions",
    "Points of impact",
    "An information box summarizing extracted crash data",
];

pub const SECTION_HEADERS: [&str; 3] = [
    "Roundabout Layout (Always Use This Configuration)",
    "From the Crash Report, Extract and Interpret",
    "Final Output",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachmentRole {
    BaseLayout,
    CrashReport,
}

impl AttachmentRole {
    pub fn as_str(self) -> &'static str {
        match self {
            AttachmentRole::BaseLayout => "base_layout",
            AttachmentRole::CrashReport => "crash_report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub role: AttachmentRole,
    /// Store-relative path; not part of the fingerprint.
    pub media_ref: String,
    pub media_type: String,
    #[serde(skip)]
    pub bytes: Vec<u8>,
}

impl Attachment {
    pub fn crash_report(media_ref: &str, media_type: &str, bytes: Vec<u8>) -> Self {
        Self {
            role: AttachmentRole::CrashReport,
            media_ref: media_ref.into(),
            media_type: media_type.into(),
            bytes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub text: String,
    pub attachments: Vec<Attachment>,
    pub template_fingerprint: String,
}

impl PromptBundle {
    pub fn base_layout(&self) -> Option<&Attachment> {
        self.attachments
            .iter()
            .find(|a| a.role == AttachmentRole::BaseLayout)
    }

    pub fn crash_report(&self) -> Option<&Attachment> {
        self.attachments
            .iter()
            .find(|a| a.role == AttachmentRole::CrashReport)
    }
}

/// Prompt text for a template: road names fill the four layout lines and
/// nothing else changes.
pub fn prompt_text(template: &GeometryTemplate) -> String {
    let mut lines: Vec<String> = INTRO.iter().map(|&l| l.into()).collect();
    for (direction, position) in LAYOUT_LINES {
        lines.push(format!("{direction}: {}", template.road_name(position)));
    }
    lines.extend(REQUIREMENTS.iter().map(|&l| String::from(l)));
    lines.extend(EXTRACTION.iter().map(|&l| String::from(l)));
    lines.extend(DAMAGE_GUIDE.iter().map(|&l| String::from(l)));
    lines.extend(FINAL_OUTPUT.iter().map(|&l| String::from(l)));
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

pub fn template_fingerprint(template: &GeometryTemplate) -> String {
    let json = serde_json::to_vec(template).unwrap_or_default();
    hex::encode(Sha256::digest(&json))
}

/// Bundle for one model call: prompt text, the empty-roadway base layout,
/// and the crash report attachment when one is given.
pub fn build_prompt(template: &GeometryTemplate, report: Option<Attachment>) -> PromptBundle {
    // Default options always validate.
    let layout = render_svg(&SceneGraph::empty(template), &RenderOptions::default())
        .unwrap_or_default();
    let mut attachments = alloc::vec![Attachment {
        role: AttachmentRole::BaseLayout,
        media_ref: BASE_LAYOUT_REF.into(),
        media_type: SVG_MEDIA_TYPE.into(),
        bytes: layout,
    }];
    if let Some(mut report) = report {
        report.role = AttachmentRole::CrashReport;
        attachments.push(report);
    }
    PromptBundle {
        text: prompt_text(template),
        attachments,
        template_fingerprint: template_fingerprint(template),
    }
}

/// Content hash over the text and each attachment's role, media type and
/// bytes, length-prefixed.
pub fn prompt_fingerprint(bundle: &PromptBundle) -> String {
    let mut h = Sha256::new();
    let mut field = |bytes: &[u8]| {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    };
    field(bundle.text.as_bytes());
    for a in &bundle.attachments {
        field(a.role.as_str().as_bytes());
        field(a.media_type.as_bytes());
        field(&a.bytes);
    }
    hex::encode(h.finalize())
}
