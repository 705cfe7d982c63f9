//! Pass/fail verdicts and plot-ready tables produced by each runner.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(criterion: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            criterion: criterion.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!("[{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.criterion, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header in {}", self.name);
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub verdicts: Vec<Verdict>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    pub elapsed_seconds: f64,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            verdicts: Vec::new(),
            tables: Vec::new(),
            elapsed_seconds: 0.0,
        }
    }

    pub fn verdict(&mut self, criterion: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict::new(criterion, passed, detail));
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn find(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes `<name>.<table>.csv` for every table and `<name>.summary.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.{}.csv", self.name, t.name));
            t.write_csv(&path)?;
            written.push(path);
        }
        let path = dir.join(format!("{}.summary.json", self.name));
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        written.push(path);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_writes_tables_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("demo");
        r.verdict("a", true, "ok");
        r.verdict("b", false, "bad");
        let mut t = Table::new("values", &["x", "y"]);
        t.push(vec!["1".into(), "2".into()]);
        r.tables.push(t);
        let files = r.write(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let csv = fs::read_to_string(dir.path().join("demo.values.csv")).unwrap();
        assert_eq!(csv, "x,y\n1,2\n");
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&files[1]).unwrap()).unwrap();
        assert_eq!(json["verdicts"][1]["passed"], false);
        assert!(!r.passed());
        assert_eq!(r.find("b").unwrap().line(), "[FAIL] b: bad");
    }
}
