//! Dataset records, ingestion, and JSONL persistence.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator between negative-prompt examples. Record texts are escaped on
/// ingestion so this sequence can never appear inside a stored record.
pub const RECORD_SEPARATOR: &str = "\n###\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Real,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Lines,
    Jsonl,
}

/// Generation provenance carried by every synthetic record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenMeta {
    pub gamma: f64,
    pub eta: f64,
    pub sampler: String,
    pub seed: u64,
    pub negative_prompt_ids: Vec<String>,
    /// Set when the record needed special handling, e.g. "empty_after_retry".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<GenMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn new(kind: DatasetKind, records: Vec<DatasetRecord>) -> Result<Dataset> {
        let ds = Dataset { kind, records };
        ds.validate()?;
        Ok(ds)
    }

    /// Unique ids; meta on every synthetic record, on no real record.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for r in &self.records {
            if !seen.insert(&r.id) {
                return Err(Error::Config(format!("duplicate record id {}", r.id)));
            }
            match self.kind {
                DatasetKind::Real if r.meta.is_some() => {
                    return Err(Error::Config(format!(
                        "real record {} carries generation metadata",
                        r.id
                    )));
                }
                DatasetKind::Synthetic if r.meta.is_none() => {
                    return Err(Error::Config(format!(
                        "synthetic record {} lacks generation metadata",
                        r.id
                    )));
                }
                _ => {}
            }
            if r.text.contains(RECORD_SEPARATOR) {
                return Err(Error::Config(format!(
                    "record {} contains the separator sequence",
                    r.id
                )));
            }
        }
        Ok(())
    }

    pub fn texts(&self) -> Vec<String> {
        self.records.iter().map(|r| r.text.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Indent any embedded separator line so the stored text can never be
/// confused with a record boundary.
pub fn escape_separator(text: &str) -> String {
    let mut out = text.to_string();
    while out.contains(RECORD_SEPARATOR) {
        out = out.replace(RECORD_SEPARATOR, "\n ###\n");
    }
    out
}

fn normalize_newlines(raw: &str) -> String {
    raw.replace("\r\n", "\n")
}

pub fn zero_padded_id(index: usize) -> String {
    format!("{index:06}")
}

/// Read a dataset of real records from disk.
pub fn ingest_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset> {
    let raw = std::fs::read_to_string(path)?;
    let text = normalize_newlines(&raw);
    let mut records = Vec::new();
    match format {
        DatasetFormat::Lines => {
            for (i, line) in text.lines().enumerate() {
                if line.is_empty() {
                    continue;
                }
                records.push(DatasetRecord {
                    id: zero_padded_id(i),
                    text: escape_separator(line),
                    label: None,
                    meta: None,
                });
            }
        }
        DatasetFormat::Jsonl => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value =
                    serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                        line: i + 1,
                        reason: e.to_string(),
                    })?;
                let text_field = value
                    .get("text")
                    .and_then(|t| t.as_str())
                    .ok_or_else(|| Error::MalformedRecord {
                        line: i + 1,
                        reason: "missing \"text\" field".into(),
                    })?;
                let id = value
                    .get("id")
                    .and_then(|v| v.as_str())
                    .map(str::to_string)
                    .unwrap_or_else(|| zero_padded_id(i));
                let label = value
                    .get("label")
                    .and_then(|v| v.as_str())
                    .map(str::to_string);
                records.push(DatasetRecord {
                    id,
                    text: escape_separator(text_field),
                    label,
                    meta: None,
                });
            }
        }
    }
    Dataset::new(DatasetKind::Real, records)
}

/// Read a previously generated synthetic dataset, metadata included.
pub fn read_synthetic_jsonl(path: &Path) -> Result<Dataset> {
    let raw = std::fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (i, line) in normalize_newlines(&raw).lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord =
            serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
        records.push(record);
    }
    Dataset::new(DatasetKind::Synthetic, records)
}

/// Serialise one record per line. Key order is fixed by the struct, so
/// identical datasets produce identical bytes.
pub fn write_jsonl(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in &dataset.records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Format(e.to_string()))?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_file_gets_zero_padded_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.txt");
        std::fs::write(&path, "first\nsecond\nthird\n").unwrap();
        let ds = ingest_dataset(&path, DatasetFormat::Lines).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.records[0].id, "000000");
        assert_eq!(ds.records[2].id, "000002");
        assert_eq!(ds.records[1].text, "second");
        assert_eq!(ds.kind, DatasetKind::Real);
    }

    #[test]
    fn crlf_matches_lf() {
        let dir = tempfile::tempdir().unwrap();
        let lf = dir.path().join("lf.txt");
        let crlf = dir.path().join("crlf.txt");
        std::fs::write(&lf, "alpha\nbeta\n").unwrap();
        std::fs::write(&crlf, "alpha\r\nbeta\r\n").unwrap();
        assert_eq!(
            ingest_dataset(&lf, DatasetFormat::Lines).unwrap(),
            ingest_dataset(&crlf, DatasetFormat::Lines).unwrap()
        );
    }

    #[test]
    fn jsonl_missing_text_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(
            &path,
            "{\"text\":\"ok\"}\n{\"label\":\"a\"}\n{\"text\":\"ok2\"}\n",
        )
        .unwrap();
        match ingest_dataset(&path, DatasetFormat::Jsonl) {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn jsonl_labels_parsed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(&path, "{\"text\":\"hi\",\"label\":\"pos\"}\n").unwrap();
        let ds = ingest_dataset(&path, DatasetFormat::Jsonl).unwrap();
        assert_eq!(ds.records[0].label.as_deref(), Some("pos"));
    }

    #[test]
    fn separator_escaped_on_ingest() {
        let escaped = escape_separator("above\n###\nbelow");
        assert!(!escaped.contains(RECORD_SEPARATOR));
        assert_eq!(escaped, "above\n ###\nbelow");
        assert_eq!(escape_separator("plain"), "plain");
    }

    #[test]
    fn kind_invariants_enforced() {
        let real_with_meta = DatasetRecord {
            id: "0".into(),
            text: "x".into(),
            label: None,
            meta: Some(GenMeta {
                gamma: 0.0,
                eta: 0.0,
                sampler: "greedy".into(),
                seed: 0,
                negative_prompt_ids: vec![],
                quality_flag: None,
            }),
        };
        assert!(Dataset::new(DatasetKind::Real, vec![real_with_meta.clone()]).is_err());
        let synth_without = DatasetRecord {
            meta: None,
            ..real_with_meta
        };
        assert!(Dataset::new(DatasetKind::Synthetic, vec![synth_without.clone()]).is_err());
        let dup = vec![
            DatasetRecord {
                id: "a".into(),
                text: "1".into(),
                label: None,
                meta: None,
            },
            DatasetRecord {
                id: "a".into(),
                text: "2".into(),
                label: None,
                meta: None,
            },
        ];
        assert!(Dataset::new(DatasetKind::Real, dup).is_err());
    }

    #[test]
    fn jsonl_round_trip_preserves_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let ds = Dataset::new(
            DatasetKind::Synthetic,
            vec![DatasetRecord {
                id: "s000000".into(),
                text: "generated text".into(),
                label: Some("a".into()),
                meta: Some(GenMeta {
                    gamma: 0.5,
                    eta: 0.9,
                    sampler: "nucleus(p=0.95,T=1)".into(),
                    seed: 42,
                    negative_prompt_ids: vec!["000001".into()],
                    quality_flag: None,
                }),
            }],
        )
        .unwrap();
        write_jsonl(&ds, &path).unwrap();
        let back = read_synthetic_jsonl(&path).unwrap();
        assert_eq!(ds, back);
        // Identical write is byte-identical.
        let p2 = dir.path().join("s2.jsonl");
        write_jsonl(&ds, &p2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&p2).unwrap()
        );
    }
}
