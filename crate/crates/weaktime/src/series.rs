//! Column-labelled numeric tables and their CSV encoding.
//!
//! CSV output is deterministic: comma separator, `.` decimal, 17
//! significant digits (round-trip safe for f64), mandatory header row, and
//! an empty field wherever a value is undefined.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone)]
pub struct TimeSeries {
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl TimeSeries {
    pub fn new(header: Vec<String>) -> Self {
        TimeSeries {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (i, value) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                if let Some(v) = value {
                    line.push_str(&format_value(*v));
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// 17 significant digits in scientific notation.
fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_and_sentinels() {
        let mut ts = TimeSeries::new(vec!["t".into(), "x".into()]);
        ts.push_row(vec![Some(0.0), Some(0.625)]);
        ts.push_row(vec![Some(0.5), None]);
        let text = ts.to_csv_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x");
        assert_eq!(lines[1], "0.0000000000000000e0,6.2500000000000000e-1");
        assert_eq!(lines[2], "5.0000000000000000e-1,");
    }

    #[test]
    fn round_trips_f64() {
        let vals = [
            std::f64::consts::PI,
            -1.0 / 3.0,
            0.5540497660648819,
            1e-300,
        ];
        for v in vals {
            let s = format_value(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "{s}");
        }
    }

    #[test]
    fn deterministic_output() {
        let mut ts = TimeSeries::new(vec!["a".into()]);
        ts.push_row(vec![Some(0.1 + 0.2)]);
        assert_eq!(ts.to_csv_string(), ts.to_csv_string());
    }
}
