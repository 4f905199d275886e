//! CSV tables and `key=value` reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::CliError;

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV table whose first line is `# <resolved config>`.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(resolved: &str, columns: &[&str]) -> Self {
        let mut text = format!("# {resolved}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv { text, width: columns.len() }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| num(v)).collect();
        self.raw_row(&cells);
    }

    pub fn raw_row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "row width does not match header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Plain-text report of `key=value` lines.
#[derive(Debug, Clone, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(resolved: &str) -> Self {
        let mut r = Report::default();
        r.text("config", resolved);
        r
    }

    pub fn real(&mut self, key: &str, value: f64) {
        self.text(key, num(value));
    }

    pub fn text(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key}={value}");
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Write `<mode>.csv` and `<mode>_report.txt` into `dir`.
pub fn write_artifacts(dir: &Path, mode: &str, csv: &Csv, report: &Report) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for (name, body) in [(format!("{mode}.csv"), csv.as_str()), (format!("{mode}_report.txt"), report.as_str())] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_digits() {
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let mut csv = Csv::new("mode=ode", &["t", "v"]);
        csv.row(&[0.0, 1.0]);
        let lines: Vec<&str> = csv.as_str().lines().collect();
        assert_eq!(lines, ["# mode=ode", "t,v", "0.0000000000000000e0,1.0000000000000000e0"]);
    }
}
