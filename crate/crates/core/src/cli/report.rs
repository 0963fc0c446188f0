//! JSON summaries and CSV tables written by the subcommands.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs::File;
use std::io::{BufWriter, Write};

use std::path::{Path, PathBuf};

use crate::config::LoadedConfig;
use crate::error::Result;
use crate::geometry::QuadratureGrid;
use crate::linalg::CMat;

/// One value compared against one tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `le` for value ≤ tolerance, `ge` for value ≥ tolerance, `band` for |value − target| ≤ tolerance.
    pub relation: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    values: Map<String, Value>,
    checks: Vec<Check>,
    tables: Vec<(String, String)>,
}

/// Rows of a CSV table with a fixed header; complex columns are split into `_re`, `_im`.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { header: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()
    }
}

/// Row-major nested rows of a small matrix, for JSON.
pub fn matrix(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Splits complex values into re, im.
pub fn cols(zs: &[Complex64]) -> Vec<f64> {
    zs.iter().flat_map(|z| [z.re, z.im]).collect()
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self { command: command.to_string(), values: Map::new(), checks: Vec::new(), tables: Vec::new() }
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn le(&mut self, name: &str, value: f64, tolerance: f64) {
        let pass = value <= tolerance;
        self.push(name, value, tolerance, "le", None, pass);
    }

    pub fn ge(&mut self, name: &str, value: f64, tolerance: f64) {
        let pass = value >= tolerance;
        self.push(name, value, tolerance, "ge", None, pass);
    }

    pub fn band(&mut self, name: &str, value: f64, target: f64, tolerance: f64) {
        let pass = (value - target).abs() <= tolerance;
        self.push(name, value, tolerance, "band", Some(target), pass);
    }

    fn push(
        &mut self,
        name: &str,
        value: f64,
        tolerance: f64,
        relation: &'static str,
        target: Option<f64>,
        pass: bool,
    ) {
        // NaN never passes
        let pass = pass && value.is_finite();
        self.checks.push(Check { name: name.to_string(), value, tolerance, relation, target, pass });
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Registers a table to be written as `<command>_<name>.csv`.
    pub fn table(&mut self, name: &str, t: &Table) -> std::io::Result<()> {
        let mut buf = Vec::new();
        t.write(&mut buf)?;
        self.tables.push((name.to_string(), String::from_utf8_lossy(&buf).into_owned()));
        Ok(())
    }

    pub fn grid_table(&mut self, grid: &QuadratureGrid) -> std::io::Result<()> {
        let mut buf = Vec::new();
        grid.write_csv(&mut buf)?;
        self.tables.push(("grid".into(), String::from_utf8_lossy(&buf).into_owned()));
        Ok(())
    }

    pub fn raw_table(&mut self, name: &str, text: String) {
        self.tables.push((name.to_string(), text));
    }

    pub fn to_json(&self, cfg: &LoadedConfig, grid: Option<&QuadratureGrid>) -> Value {
        let grid_info = grid.map(|g| {
            json!({
                "radial_points": g.radial_points,
                "angular_points": g.angular_points,
                "nodes": g.len(),
                "area": g.area(),
                "domain": g.domain,
            })
        });
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        json!({
            "command": self.command,
            "name": cfg.config.name,
            "config_hash": cfg.hash,
            "crate_version": env!("CARGO_PKG_VERSION"),
            "grid": grid_info,
            "inputs": cfg.value,
            "values": self.values,
            "checks": self.checks,
            "failed": failed,
            "pass": self.passed(),
            "tables": self.tables.iter().map(|(n, _)| self.file_name(n)).collect::<Vec<_>>(),
        })
    }

    fn file_name(&self, table: &str) -> String {
        format!("{}_{}.csv", self.command.replace('-', "_"), table)
    }

    /// Writes `<command>.json` and the CSV tables into `dir`; returns the JSON path.
    pub fn write(&self, dir: &Path, cfg: &LoadedConfig, grid: Option<&QuadratureGrid>) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in &self.tables {
            std::fs::write(dir.join(self.file_name(name)), text)?;
        }
        let path = dir.join(format!("{}.json", self.command.replace('-', "_")));
        let mut f = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut f, &self.to_json(cfg, grid)).map_err(std::io::Error::from)?;
        writeln!(f)?;
        f.flush()?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn checks_and_nan() {
        let mut r = Report::new("det2");
        r.le("a", 1e-9, 1e-8);
        r.ge("b", 4.0, 3.0);
        r.band("c", 2.1, 2.0, 0.3);
        assert!(r.passed());
        r.le("d", f64::NAN, 1.0);
        assert!(!r.passed());
        let cfg = LoadedConfig::from_value(json!({}), &[]).unwrap();
        let v = r.to_json(&cfg, None);
        assert_eq!(v["failed"], json!(["d"]));
        assert_eq!(v["config_hash"].as_str().unwrap(), cfg.hash);
    }

    #[test]
    fn table_splits_complex_values() {
        let mut t = Table::new(&["x", "psi_re", "psi_im"]);
        let mut row = vec![0.5];
        row.extend(cols(&[Complex64::new(1.0, -2.0)]));
        t.push(row);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("x,psi_re,psi_im\n5.00000000000000000e-1,1.00000000000000000e0,-2.00000000000000000e0"));
    }
}
