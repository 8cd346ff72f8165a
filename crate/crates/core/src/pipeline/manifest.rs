//! JSON-lines dataset manifests and the ancestor-count proxy labeling.
//!
//! One record per line. Records with more than 100 ancestors are labeled
//! creative, records with 0 non-creative; anything in between is `unlabeled`
//! and excluded from classifier training. Malformed lines are reported with
//! their line number and skipped unless strict mode is on.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::toyworld::ANCESTOR_THRESHOLD;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ManifestRecord {
    pub image_id: String,
    pub path: PathBuf,
    pub ancestor_count: u32,
    pub user_id: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordLabel {
    Creative,
    NonCreative,
    /// 1..=100 ancestors: the labeling rule is silent, so the record is
    /// excluded from classifier training.
    Unlabeled,
}

pub fn label_for(ancestor_count: u32) -> RecordLabel {
    if ancestor_count > ANCESTOR_THRESHOLD {
        RecordLabel::Creative
    } else if ancestor_count == 0 {
        RecordLabel::NonCreative
    } else {
        RecordLabel::Unlabeled
    }
}

#[derive(Clone, Debug)]
pub struct LabeledRecord {
    pub record: ManifestRecord,
    pub label: RecordLabel,
    /// The image path resolved against the manifest location.
    pub resolved_path: PathBuf,
    pub resolved_latent: Option<PathBuf>,
    pub path_exists: bool,
}

#[derive(Clone, Debug, Default)]
pub struct IngestOutcome {
    pub records: Vec<LabeledRecord>,
    /// (line number, problem), 1-based.
    pub warnings: Vec<(usize, String)>,
}

/// Reads and validates a JSON-lines manifest. With `strict` any malformed
/// line, duplicate id, or unresolvable path aborts; otherwise problems are
/// collected as warnings and the run continues.
pub fn ingest_manifest(path: &Path, strict: bool) -> Result<IngestOutcome, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::MissingInput(format!("manifest {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut outcome = IngestOutcome::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String, outcome: &mut IngestOutcome| -> Result<(), PipelineError> {
            if strict {
                Err(PipelineError::Manifest { line: line_no, message })
            } else {
                outcome.warnings.push((line_no, message));
                Ok(())
            }
        };
        let record: ManifestRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                fail(format!("malformed record: {e}"), &mut outcome)?;
                continue;
            }
        };
        if !seen.insert(record.image_id.clone()) {
            fail(format!("duplicate image_id '{}'", record.image_id), &mut outcome)?;
            continue;
        }
        let resolved_path = resolve(base, &record.path);
        let resolved_latent = record.latent_path.as_ref().map(|p| resolve(base, p));
        let path_exists = resolved_path.exists();
        if !path_exists {
            fail(
                format!("image path '{}' not resolvable", resolved_path.display()),
                &mut outcome,
            )?;
        }
        let label = label_for(record.ancestor_count);
        outcome.records.push(LabeledRecord {
            label,
            resolved_path,
            resolved_latent,
            path_exists,
            record,
        });
    }
    Ok(outcome)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Serializes records as JSON lines.
pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<(), PipelineError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(dir: &Path, lines: &[&str]) -> PathBuf {
        let path = dir.join("manifest.jsonl");
        std::fs::write(&path, lines.join("\n")).unwrap();
        path
    }

    fn record_line(id: &str, ancestors: u32, image: &str) -> String {
        format!(
            "{{\"image_id\":\"{id}\",\"path\":\"{image}\",\"ancestor_count\":{ancestors},\
             \"user_id\":\"u1\",\"width\":8,\"height\":8}}"
        )
    }

    #[test]
    fn threshold_rule() {
        assert_eq!(label_for(150), RecordLabel::Creative);
        assert_eq!(label_for(101), RecordLabel::Creative);
        assert_eq!(label_for(0), RecordLabel::NonCreative);
        assert_eq!(label_for(50), RecordLabel::Unlabeled);
        assert_eq!(label_for(100), RecordLabel::Unlabeled);
    }

    #[test]
    fn malformed_lines_are_reported_with_numbers() {
        let dir = tempfile::tempdir().unwrap();
        crate::metrics::save_png(
            &crate::metrics::Image::uniform(4, 4, [0.5; 3]),
            &dir.path().join("img.png"),
        )
        .unwrap();
        let a = record_line("a", 150, "img.png");
        let c = record_line("c", 0, "img.png");
        let path = write_lines(dir.path(), &[&a, "{not json", &c]);

        let outcome = ingest_manifest(&path, false).unwrap();
        assert_eq!(outcome.records.len(), 2);
        assert_eq!(outcome.warnings.len(), 1);
        assert_eq!(outcome.warnings[0].0, 2);
        assert_eq!(outcome.records[0].label, RecordLabel::Creative);
        assert_eq!(outcome.records[1].label, RecordLabel::NonCreative);

        let err = ingest_manifest(&path, true);
        assert!(matches!(err, Err(PipelineError::Manifest { line: 2, .. })));
    }

    #[test]
    fn duplicate_ids_and_missing_paths_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let a = record_line("a", 150, "missing.png");
        let dup = record_line("a", 0, "missing.png");
        let path = write_lines(dir.path(), &[&a, &dup]);
        let outcome = ingest_manifest(&path, false).unwrap();
        // First record kept (path flagged), duplicate dropped.
        assert_eq!(outcome.records.len(), 1);
        assert!(!outcome.records[0].path_exists);
        assert_eq!(outcome.warnings.len(), 2);
    }

    #[test]
    fn roundtrip_through_writer() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![ManifestRecord {
            image_id: "x".into(),
            path: "img/x.png".into(),
            ancestor_count: 120,
            user_id: "u7".into(),
            width: 32,
            height: 32,
            latent_path: Some("latents/x.txt".into()),
        }];
        let path = dir.path().join("m.jsonl");
        write_manifest(&path, &records).unwrap();
        let outcome = ingest_manifest(&path, false).unwrap();
        assert_eq!(outcome.records.len(), 1);
        assert_eq!(outcome.records[0].record, records[0]);
        assert_eq!(outcome.records[0].label, RecordLabel::Creative);
    }
}
