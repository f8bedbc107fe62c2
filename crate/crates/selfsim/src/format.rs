//! CSV tables with `# key=value` header lines, and JSON run records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub comments: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn comment(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.comments.push((key.to_string(), value.to_string()));
        self
    }

    /// Shortest form that reads back to the same `f64` (`1e-10`, `1.5`).
    pub fn comment_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.comment(key, format!("{value:?}"))
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.comments {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory write");
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        out
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut comments = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            if let Some((k, v)) = body.split_once('=') {
                comments.push((k.to_string(), v.to_string()));
            }
        }
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let bad = |e: csv::Error| CliError::validation(format!("malformed csv: {e}"));
        let header = r.headers().map_err(bad)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(bad)?.iter().map(String::from).collect());
        }
        Ok(Self { comments, header, rows })
    }

    pub fn meta(&self) -> BTreeMap<&str, &str> {
        self.comments.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect()
    }

    /// A numeric column by name.
    pub fn column(&self, name: &str) -> CliResult<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(format!("no column '{name}'")))?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|e| CliError::validation(format!("column '{name}': {e}")))
            })
            .collect()
    }
}

/// A JSON run record: the resolved configuration next to its results, so the
/// run can be repeated from the file alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub config: RunConfig,
    pub result: serde_json::Value,
}

impl RunRecord {
    pub fn new(config: RunConfig, result: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
            config,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("run record: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CheckConfig, Command, Format};

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, 6.02214076e23] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.comment("tool", "x").comment_f64("tol", 1e-10);
        t.push(vec![num(1.5), num(-0.25)]);
        let text = t.to_csv();
        assert!(text.starts_with("# tool=x\n# tol=1e-10\na,b\n"));
        let back = Table::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("b").unwrap(), vec![-0.25]);
        assert!(back.column("c").is_err());
    }

    #[test]
    fn record_round_trip() {
        let config = RunConfig {
            command: Command::Check(CheckConfig { quick: true, seed: 7 }),
            format: Format::Json,
        };
        let rec = RunRecord::new(config, serde_json::json!({ "pass": true }));
        let text = rec.to_json();
        assert!(text.contains("\"command\": \"check\""));
        assert!(!text.contains("timestamp"));
        assert_eq!(RunRecord::from_json(&text).unwrap(), rec);
    }
}
