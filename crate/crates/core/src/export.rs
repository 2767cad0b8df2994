//! Plain CSV tables for curves, trajectories and histograms.
//!
//! Numbers use Rust's shortest round-trip formatting ('.' decimal, no
//! grouping); non-finite values are written as empty cells. Every row ends
//! with a newline.

use std::fmt;

/// Format a float for CSV output. Non-finite values become an empty cell.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.header.len());
        self.rows.push(values.iter().map(|&v| fmt_f64(v)).collect());
    }

    /// Push pre-formatted cells (labels, integers).
    pub fn push_cells(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl fmt::Display for CsvTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// A single `(t, value)` curve as CSV, with `t` starting at `first_t`.
pub fn curve_csv(name: &str, first_t: usize, values: &[f64]) -> CsvTable {
    let mut table = CsvTable::new(&["t", name]);
    for (i, &v) in values.iter().enumerate() {
        table.push_row(&[(first_t + i) as f64, v]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(2.5), "2.5");
        assert_eq!(fmt_f64(1e-7), "0.0000001");
        assert_eq!(fmt_f64(f64::NAN), "");
        let mut t = CsvTable::new(&["t", "v"]);
        t.push_row(&[1.0, 0.25]);
        t.push_cells(vec!["2".into(), "x".into()]);
        assert_eq!(t.to_string(), "t,v\n1,0.25\n2,x\n");
        assert_eq!(curve_csv("v", 1, &[0.5]).to_string(), "t,v\n1,0.5\n");
    }
}
