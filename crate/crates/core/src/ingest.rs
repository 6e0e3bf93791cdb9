//! Parsing and serialization of run logs (CSV and JSON) and hardware
//! profiles, with per-row issue reporting.
//!
//! CSV schema: `model_id, depth, params_m, budget_min, val_bpb, seed,
//! tokens_per_sec` — header required, the last two columns optional and may
//! be empty. `tokens_per_sec` is validated when present but not stored on
//! the record; throughput lives in hardware profiles.
//!
//! JSON schema: `{"dataset_tokens": <int, optional>, "runs": [<record>…]}`
//! with the same field names per record.

use crate::domain::{DomainError, RunGrid, RunRecord};
use crate::hardware::HardwareProfile;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueSeverity {
    Warning,
    Error,
}

/// One parse finding. `row` is the 1-based data row (CSV) or array index
/// (JSON); `None` for whole-input findings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestIssue {
    pub severity: IssueSeverity,
    pub row: Option<usize>,
    pub message: String,
}

impl fmt::Display for IngestIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            IssueSeverity::Warning => "warning",
            IssueSeverity::Error => "error",
        };
        match self.row {
            Some(r) => write!(f, "{sev}: row {r}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no valid run records in input")]
    EmptyInput,
    #[error("unparseable input: {0}")]
    Parse(String),
    #[error("input rejected: {} issue(s), first: {}", .issues.len(), first_error(.issues))]
    Invalid { issues: Vec<IngestIssue> },
    #[error("hardware profile needs at least 2 points, found {found}")]
    InsufficientPoints { found: usize },
    #[error("invalid hardware profile: {0}")]
    Profile(String),
}

fn first_error(issues: &[IngestIssue]) -> String {
    issues
        .iter()
        .find(|i| i.severity == IssueSeverity::Error)
        .map(|i| i.to_string())
        .unwrap_or_else(|| "(none)".to_owned())
}

fn warn(row: usize, message: String) -> IngestIssue {
    IngestIssue {
        severity: IssueSeverity::Warning,
        row: Some(row),
        message,
    }
}

fn err(row: Option<usize>, message: String) -> IngestIssue {
    IngestIssue {
        severity: IssueSeverity::Error,
        row,
        message,
    }
}

/// Parse a run log. Well-formed rows become records; malformed rows are
/// skipped with warning issues; duplicate `(model_id, budget_min, seed)`
/// keys and conflicting per-depth parameter counts are error issues that
/// withhold the grid.
pub fn parse_runs(text: &str, format: RunFormat) -> Result<(RunGrid, Vec<IngestIssue>), IngestError> {
    let (records, dataset_tokens, mut issues) = match format {
        RunFormat::Csv => parse_csv(text)?,
        RunFormat::Json => parse_json(text)?,
    };
    if records.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut fatal = false;
    for (i, (row, r)) in records.iter().enumerate() {
        for (prev_row, p) in &records[..i] {
            if p.model_id == r.model_id && p.budget_min == r.budget_min && p.seed == r.seed {
                fatal = true;
                issues.push(err(
                    Some(*row),
                    format!(
                        "duplicate record for ({}, {}min, seed {:?}); first seen at row {}",
                        r.model_id, r.budget_min, r.seed, prev_row
                    ),
                ));
            } else if p.depth == r.depth && p.params_m != r.params_m {
                fatal = true;
                issues.push(err(
                    Some(*row),
                    format!(
                        "depth {} given conflicting params_m {} and {}",
                        r.depth, p.params_m, r.params_m
                    ),
                ));
            }
        }
    }
    if fatal {
        return Err(IngestError::Invalid { issues });
    }
    let grid = RunGrid::new(records.into_iter().map(|(_, r)| r).collect(), dataset_tokens)
        .map_err(|e: DomainError| IngestError::Parse(e.to_string()))?;
    Ok((grid, issues))
}

type ParsedRows = (Vec<(usize, RunRecord)>, Option<u64>, Vec<IngestIssue>);

fn parse_csv(text: &str) -> Result<ParsedRows, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Parse(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = ["model_id", "depth", "params_m", "budget_min", "val_bpb"];
    let mut cols = Vec::new();
    for name in required {
        cols.push(
            col(name).ok_or_else(|| IngestError::Parse(format!("missing column '{name}'")))?,
        );
    }
    let (c_model, c_depth, c_params, c_budget, c_bpb) =
        (cols[0], cols[1], cols[2], cols[3], cols[4]);
    let c_seed = col("seed");
    let c_tps = col("tokens_per_sec");

    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let rownum = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                issues.push(warn(rownum, format!("unreadable row: {e}")));
                continue;
            }
        };
        let field = |idx: usize| row.get(idx).unwrap_or("");
        match parse_csv_row(
            field(c_model),
            field(c_depth),
            field(c_params),
            field(c_budget),
            field(c_bpb),
            c_seed.map(&field),
            c_tps.map(&field),
        ) {
            Ok((record, row_issues)) => {
                for m in row_issues {
                    issues.push(warn(rownum, m));
                }
                records.push((rownum, record));
            }
            Err(message) => issues.push(warn(rownum, message)),
        }
    }
    Ok((records, None, issues))
}

#[allow(clippy::too_many_arguments)]
fn parse_csv_row(
    model_id: &str,
    depth: &str,
    params_m: &str,
    budget_min: &str,
    val_bpb: &str,
    seed: Option<&str>,
    tokens_per_sec: Option<&str>,
) -> Result<(RunRecord, Vec<String>), String> {
    if model_id.is_empty() {
        return Err("empty model_id".to_owned());
    }
    let depth: u32 = depth
        .parse()
        .map_err(|_| format!("invalid depth '{depth}'"))?;
    if depth == 0 {
        return Err("depth must be positive".to_owned());
    }
    let positive = |name: &str, s: &str| -> Result<f64, String> {
        let v: f64 = s
            .parse()
            .map_err(|_| format!("invalid {name} '{s}'"))?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{name} must be positive, got {s}"))
        }
    };
    let params_m = positive("params_m", params_m)?;
    let budget_min = positive("budget_min", budget_min)?;
    let val_bpb = positive("val_bpb", val_bpb)?;
    let seed = match seed {
        Some("") | None => None,
        Some(s) => Some(
            s.parse::<i64>()
                .map_err(|_| format!("invalid seed '{s}'"))?,
        ),
    };
    let mut notes = Vec::new();
    if let Some(s) = tokens_per_sec {
        if !s.is_empty() && positive("tokens_per_sec", s).is_err() {
            notes.push(format!("ignoring invalid tokens_per_sec '{s}'"));
        }
    }
    let mut record = RunRecord::new(depth, params_m, budget_min, val_bpb);
    record.model_id = model_id.to_owned();
    record.seed = seed;
    Ok((record, notes))
}

#[derive(Deserialize)]
struct RunsFileDe {
    #[serde(default)]
    dataset_tokens: Option<u64>,
    runs: Vec<serde_json::Value>,
}

#[derive(Serialize)]
struct RunsFileSer<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset_tokens: Option<u64>,
    runs: &'a [RunRecord],
}

fn parse_json(text: &str) -> Result<ParsedRows, IngestError> {
    let file: RunsFileDe =
        serde_json::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (i, value) in file.runs.into_iter().enumerate() {
        let rownum = i + 1;
        match serde_json::from_value::<RunRecord>(value) {
            Ok(r) => {
                if r.depth == 0 || r.params_m <= 0.0 || r.budget_min <= 0.0 || r.val_bpb <= 0.0 {
                    issues.push(warn(rownum, "non-positive field".to_owned()));
                } else {
                    records.push((rownum, r));
                }
            }
            Err(e) => issues.push(warn(rownum, format!("malformed record: {e}"))),
        }
    }
    Ok((records, file.dataset_tokens, issues))
}

/// Serialize a grid in either run-log format; `parse_runs` reads the result
/// back to an equal set of records (JSON additionally round-trips
/// `dataset_tokens`, which CSV cannot carry).
pub fn serialize_runs(grid: &RunGrid, format: RunFormat) -> String {
    match format {
        RunFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "model_id",
                "depth",
                "params_m",
                "budget_min",
                "val_bpb",
                "seed",
                "tokens_per_sec",
            ])
            .expect("in-memory write");
            for r in grid.records() {
                w.write_record([
                    r.model_id.as_str(),
                    &r.depth.to_string(),
                    &r.params_m.to_string(),
                    &r.budget_min.to_string(),
                    &r.val_bpb.to_string(),
                    &r.seed.map(|s| s.to_string()).unwrap_or_default(),
                    "",
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
        }
        RunFormat::Json => {
            let file = RunsFileSer {
                dataset_tokens: grid.dataset_tokens,
                runs: grid.records(),
            };
            let mut out = serde_json::to_string_pretty(&file).expect("serializable");
            out.push('\n');
            out
        }
    }
}

#[derive(Deserialize)]
struct ProfileFileDe {
    name: String,
    #[serde(default)]
    vram_gb: Option<f64>,
    points: Vec<(f64, f64)>,
}

/// Parse a hardware profile JSON document:
/// `{"name": …, "vram_gb": <optional>, "points": [[params_m, tokens_per_sec]…]}`.
pub fn parse_hardware_profile(text: &str) -> Result<HardwareProfile, IngestError> {
    let file: ProfileFileDe =
        serde_json::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
    if file.points.len() < 2 {
        return Err(IngestError::InsufficientPoints {
            found: file.points.len(),
        });
    }
    HardwareProfile::new(&file.name, file.points, file.vram_gb)
        .map_err(|e| IngestError::Profile(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_reference_dataset;

    #[test]
    fn parses_reference_style_row() {
        let text = "model_id,depth,params_m,budget_min,val_bpb,seed,tokens_per_sec\n\
                    D14,14,200.9,60,0.945,,\n";
        let (grid, issues) = parse_runs(text, RunFormat::Csv).unwrap();
        assert!(issues.is_empty());
        let r = &grid.records()[0];
        assert_eq!(r.model_id, "D14");
        assert_eq!(r.depth, 14);
        assert_eq!(r.params_m, 200.9);
        assert_eq!(r.budget_min, 60.0);
        assert_eq!(r.val_bpb, 0.945);
        assert_eq!(r.seed, None);
        assert_eq!(r.architecture, "dense");
    }

    #[test]
    fn empty_input_is_an_error() {
        let only_header = "model_id,depth,params_m,budget_min,val_bpb,seed,tokens_per_sec\n";
        assert!(matches!(
            parse_runs(only_header, RunFormat::Csv),
            Err(IngestError::EmptyInput)
        ));
        assert!(matches!(
            parse_runs("{\"runs\": []}", RunFormat::Json),
            Err(IngestError::EmptyInput)
        ));
    }

    #[test]
    fn duplicate_key_is_an_error_issue() {
        let text = "model_id,depth,params_m,budget_min,val_bpb,seed,tokens_per_sec\n\
                    D8,8,50.3,5,1.133,42,\n\
                    D8,8,50.3,5,1.140,42,\n";
        match parse_runs(text, RunFormat::Csv) {
            Err(IngestError::Invalid { issues }) => {
                assert!(issues
                    .iter()
                    .any(|i| i.severity == IssueSeverity::Error && i.message.contains("duplicate")));
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_become_warnings() {
        let text = "model_id,depth,params_m,budget_min,val_bpb,seed,tokens_per_sec\n\
                    D8,8,50.3,5,1.133,,\n\
                    D10,ten,85.9,5,1.178,,\n\
                    D12,12,135.3,-5,1.363,,\n";
        let (grid, issues) = parse_runs(text, RunFormat::Csv).unwrap();
        assert_eq!(grid.records().len(), 1);
        assert_eq!(issues.len(), 2);
        assert!(issues.iter().all(|i| i.severity == IssueSeverity::Warning));
        assert_eq!(issues[0].row, Some(2));
    }

    #[test]
    fn csv_round_trips_records() {
        let ds = load_reference_dataset();
        for grid in [&ds.grid, &ds.multiseed] {
            let text = serialize_runs(grid, RunFormat::Csv);
            let (parsed, issues) = parse_runs(&text, RunFormat::Csv).unwrap();
            assert!(issues.is_empty());
            assert_eq!(parsed.records(), grid.records());
        }
    }

    #[test]
    fn json_round_trips_everything() {
        let ds = load_reference_dataset();
        let text = serialize_runs(&ds.grid, RunFormat::Json);
        let (parsed, issues) = parse_runs(&text, RunFormat::Json).unwrap();
        assert!(issues.is_empty());
        assert_eq!(parsed, ds.grid);
        assert_eq!(parsed.dataset_tokens, Some(48_000_000));
    }

    #[test]
    fn hardware_profile_parsing() {
        let two = r#"{"name": "gpu", "points": [[50.3, 428000], [519.0, 36000]]}"#;
        let profile = parse_hardware_profile(two).unwrap();
        assert_eq!(profile.points().len(), 2);
        assert_eq!(profile.name, "gpu");

        let one = r#"{"name": "gpu", "points": [[50.3, 428000]]}"#;
        assert!(matches!(
            parse_hardware_profile(one),
            Err(IngestError::InsufficientPoints { found: 1 })
        ));

        let seven = r#"{"name": "gpu", "vram_gb": 24.0, "points": [
            [50.3, 428000], [85.9, 252000], [135.3, 160000], [200.9, 110000],
            [285.2, 78000], [519.0, 36000], [855.6, 20000]]}"#;
        let profile = parse_hardware_profile(seven).unwrap();
        assert_eq!(profile.points().len(), 7);
        assert_eq!(profile.vram_gb, Some(24.0));
    }
}
