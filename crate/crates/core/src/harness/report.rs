use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentKind, ScenarioConfig};

/// Bumped whenever the report body or its CSV layout changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Run metadata that legitimately differs between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool: String,
    pub tool_version: String,
    pub created_unix_secs: u64,
}

impl ReportHeader {
    pub fn now() -> Self {
        ReportHeader {
            tool: "fedmask".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            created_unix_secs: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// Column-named rows; cells are numbers, strings or booleans.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Cells of `column`, in row order.
    pub fn column(&self, column: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| c == column)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// CSV with a leading `schema_version` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("schema_version");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&REPORT_SCHEMA_VERSION.to_string());
            for v in r {
                out.push(',');
                match v {
                    Value::String(s) if s.contains([',', '"', '\n']) => {
                        out.push('"');
                        out.push_str(&s.replace('"', "\"\""));
                        out.push('"');
                    }
                    Value::String(s) => out.push_str(s),
                    Value::Null => {}
                    other => out.push_str(&other.to_string()),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// A pass/fail assertion evaluated by the run itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Everything that must be byte-identical across runs with the same config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    /// Echo of the config that produced this body.
    pub config: ScenarioConfig,
    pub table: Table,
    pub summary: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub header: ReportHeader,
    pub body: ReportBody,
    /// Extra files (transcripts, images) written next to the report.
    #[serde(skip)]
    pub artifacts: Vec<(String, Vec<u8>)>,
}

impl ExperimentReport {
    pub fn new(config: &ScenarioConfig, table: Table) -> Self {
        ExperimentReport {
            header: ReportHeader::now(),
            body: ReportBody {
                schema_version: REPORT_SCHEMA_VERSION,
                kind: config.kind,
                config: config.clone(),
                table,
                summary: BTreeMap::new(),
                checks: Vec::new(),
            },
            artifacts: Vec::new(),
        }
    }

    pub fn summarize(&mut self, key: &str, v: impl Into<Value>) {
        self.body.summary.insert(key.into(), v.into());
    }

    pub fn check(&mut self, c: Check) {
        self.body.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.body.checks.iter().all(|c| c.passed)
    }

    /// Canonical bytes of the body: pretty JSON with a trailing newline.
    pub fn body_bytes(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(&self.body)?;
        v.push(b'\n');
        Ok(v)
    }

    /// Writes `header.json`, `body.json`, `rows.csv`, `config.toml` and the
    /// artifacts into `dir`. Each file is written to a temporary name and
    /// renamed into place.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files: Vec<(String, Vec<u8>)> = vec![
            (
                "header.json".into(),
                serde_json::to_vec_pretty(&self.header)?,
            ),
            ("body.json".into(), self.body_bytes()?),
            ("rows.csv".into(), self.body.table.to_csv().into_bytes()),
            (
                "config.toml".into(),
                self.body.config.to_toml()?.into_bytes(),
            ),
        ];
        files.extend(self.artifacts.iter().cloned());
        let mut written = Vec::with_capacity(files.len());
        for (name, bytes) in files {
            let path = dir.join(&name);
            write_atomic(&path, &bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_quotes_awkward_strings() {
        let mut t = Table::new(&["name", "x"]);
        t.push(vec![json!("a,b"), json!(1.5)]);
        t.push(vec![json!("plain"), Value::Null]);
        assert_eq!(
            t.to_csv(),
            "schema_version,name,x\n1,\"a,b\",1.5\n1,plain,\n"
        );
    }

    #[test]
    fn header_is_outside_the_body() {
        let cfg = ScenarioConfig::default();
        let mut a = ExperimentReport::new(&cfg, Table::new(&["x"]));
        let mut b = a.clone();
        a.header.created_unix_secs = 1;
        b.header.created_unix_secs = 2;
        assert_eq!(a.body_bytes().unwrap(), b.body_bytes().unwrap());
    }

    #[test]
    fn write_produces_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::default();
        let mut r = ExperimentReport::new(&cfg, Table::new(&["x"]));
        r.artifacts.push(("extra.txt".into(), b"hi".to_vec()));
        let files = r.write(dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let echoed = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&echoed).unwrap(), cfg);
        assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| !e
            .unwrap()
            .file_name()
            .to_string_lossy()
            .ends_with(".tmp")));
    }
}
