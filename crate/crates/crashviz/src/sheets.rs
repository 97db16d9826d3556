//! Score-sheet CSV: `case_id,model_id,rater_id,m1..m10,notes`.
//!
//! Scores are `0` or `1`. The notes column holds a JSON object keyed by
//! metric (`{"m5":"impact drawn on the island"}`) or is left empty.

use std::collections::BTreeMap;

use crashviz_core::{MetricId, Rater, ScoreSheet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SheetError {
    /// `row` is the 1-based line in the file; the header is line 1.
    #[error("row {row}: {reason}")]
    SchemaViolation { row: usize, reason: String },
}

impl SheetError {
    pub fn row(&self) -> usize {
        match self {
            SheetError::SchemaViolation { row, .. } => *row,
        }
    }
}

/// One CSV row, also accepted as a JSON request body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetRow {
    #[serde(default)]
    pub case_id: String,
    pub model_id: String,
    pub rater_id: String,
    pub m1: u8,
    pub m2: u8,
    pub m3: u8,
    pub m4: u8,
    pub m5: u8,
    pub m6: u8,
    pub m7: u8,
    pub m8: u8,
    pub m9: u8,
    pub m10: u8,
    #[serde(default)]
    pub notes: String,
}

pub const HEADER: [&str; 14] = [
    "case_id", "model_id", "rater_id", "m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8", "m9", "m10",
    "notes",
];

impl SheetRow {
    fn scores_raw(&self) -> [u8; 10] {
        [
            self.m1, self.m2, self.m3, self.m4, self.m5, self.m6, self.m7, self.m8, self.m9, self.m10,
        ]
    }

    pub fn from_sheet(sheet: &ScoreSheet) -> Self {
        let s = sheet.scores.map(u8::from);
        let notes = if sheet.notes.is_empty() {
            String::new()
        } else {
            let map: BTreeMap<String, &String> = sheet
                .notes
                .iter()
                .map(|(m, text)| (format!("m{}", m.number()), text))
                .collect();
            serde_json::to_string(&map).unwrap_or_default()
        };
        Self {
            case_id: sheet.case_id.clone(),
            model_id: sheet.model_id.clone(),
            rater_id: sheet.rater.id().to_string(),
            m1: s[0],
            m2: s[1],
            m3: s[2],
            m4: s[3],
            m5: s[4],
            m6: s[5],
            m7: s[6],
            m8: s[7],
            m9: s[8],
            m10: s[9],
            notes,
        }
    }

    /// Checks binary scores, non-empty ids and the notes object.
    pub fn to_sheet(&self) -> Result<ScoreSheet, String> {
        for (field, value) in [
            ("case_id", &self.case_id),
            ("model_id", &self.model_id),
            ("rater_id", &self.rater_id),
        ] {
            if value.trim().is_empty() {
                return Err(format!("{field} is empty"));
            }
        }
        let mut sheet = ScoreSheet::new(self.case_id.trim(), self.model_id.trim(), Rater::from_id(&self.rater_id));
        for (metric, raw) in MetricId::ALL.into_iter().zip(self.scores_raw()) {
            match raw {
                0 | 1 => sheet.set(metric, raw == 1),
                other => return Err(format!("m{} must be 0 or 1, got {other}", metric.number())),
            }
        }
        if !self.notes.trim().is_empty() {
            let map: BTreeMap<String, String> = serde_json::from_str(&self.notes)
                .map_err(|e| format!("notes is not a JSON object of strings: {e}"))?;
            for (key, text) in map {
                let metric = key
                    .strip_prefix('m')
                    .and_then(|n| n.parse().ok())
                    .and_then(MetricId::from_number)
                    .ok_or_else(|| format!("notes key `{key}` is not a metric"))?;
                sheet.notes.insert(metric, text);
            }
        }
        Ok(sheet)
    }
}

pub fn ingest_sheets(bytes: &[u8]) -> Result<Vec<ScoreSheet>, SheetError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| SheetError::SchemaViolation { row: 1, reason: e.to_string() })?
        .clone();
    if let Some(missing) = HEADER.iter().find(|h| !headers.iter().any(|c| c == **h)) {
        return Err(SheetError::SchemaViolation {
            row: 1,
            reason: format!("missing column `{missing}`"),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<SheetRow>().enumerate() {
        let line = i + 2;
        let fail = |reason: String| SheetError::SchemaViolation { row: line, reason };
        let row = row.map_err(|e| fail(e.to_string()))?;
        out.push(row.to_sheet().map_err(fail)?);
    }
    Ok(out)
}

pub fn write_sheets(sheets: &[ScoreSheet]) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    // Serializing a plain struct into memory cannot fail.
    if sheets.is_empty() {
        let _ = writer.write_record(HEADER);
    }
    for sheet in sheets {
        let _ = writer.serialize(SheetRow::from_sheet(sheet));
    }
    writer.into_inner().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sheet(case: &str, rater: Rater) -> ScoreSheet {
        let mut s = ScoreSheet::new(case, "GPT-4o", rater);
        s.scores = [true, true, false, true, false, true, true, false, true, true];
        s.notes.insert(MetricId::CollisionPointAccuracy, "impact drawn \"inside\", the island".into());
        s
    }

    #[test]
    fn sheets_round_trip_through_csv() {
        let sheets = vec![
            sheet("case-001", Rater::Human("alice".into())),
            sheet("case-002", Rater::Auto),
            ScoreSheet::new("case-003", "Janus-4o", Rater::Consensus),
        ];
        let bytes = write_sheets(&sheets);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("case_id,model_id,rater_id,m1,m2,m3,m4,m5,m6,m7,m8,m9,m10,notes\n"));
        assert_eq!(ingest_sheets(&bytes).unwrap(), sheets);
    }

    #[test]
    fn header_only_is_empty() {
        let bytes = write_sheets(&[]);
        assert_eq!(ingest_sheets(&bytes).unwrap(), vec![]);
    }

    #[test]
    fn non_binary_score_names_the_row() {
        let csv = "case_id,model_id,rater_id,m1,m2,m3,m4,m5,m6,m7,m8,m9,m10,notes\n\
                   case-001,GPT-4o,alice,1,1,1,1,1,1,1,1,1,1,\n\
                   case-002,GPT-4o,alice,1,2,1,1,1,1,1,1,1,1,\n";
        let err = ingest_sheets(csv.as_bytes()).unwrap_err();
        assert_eq!(err.row(), 3);
        assert!(err.to_string().contains("m2"), "{err}");
    }

    #[test]
    fn missing_column_is_a_header_error() {
        let csv = "case_id,model_id,m1\ncase-001,GPT-4o,1\n";
        assert_eq!(ingest_sheets(csv.as_bytes()).unwrap_err().row(), 1);
    }
}
