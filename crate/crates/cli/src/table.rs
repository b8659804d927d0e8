//! Result tables and their CSV encoding.

use std::io::Write;

use serde_json::{Map, Value};

use crate::failure::Failure;

/// One CSV field.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    /// Seventeen significant digits, enough to round-trip any `f64`.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// RFC 4180 with a header row and LF line endings.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Failure> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, Failure> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Failure::Io(e.to_string()))
    }

    /// Rows as JSON objects keyed by column.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.to_json())).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_through_csv() {
        let mut t = Table::new(&["T", "estimate", "method"]);
        let x = 0.1 + 0.2;
        t.push(vec![Cell::from(5.0), Cell::from(x), Cell::from("LR")]);
        let text = t.to_csv_string().unwrap();
        assert_eq!(text.lines().next(), Some("T,estimate,method"));
        assert!(!text.contains('\r'));
        let field = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
        assert_eq!(field.parse::<f64>().unwrap(), x);
        assert_eq!(field, "3.0000000000000004e-1");
    }

    #[test]
    fn text_fields_are_quoted_when_needed() {
        let mut t = Table::new(&["param"]);
        t.push(vec![Cell::from("a,b")]);
        assert_eq!(t.to_csv_string().unwrap(), "param\n\"a,b\"\n");
    }

    #[test]
    fn json_rows_follow_column_order() {
        let mut t = Table::new(&["r", "density"]);
        t.push(vec![Cell::from(0.5), Cell::from(f64::NAN)]);
        let v = t.to_json();
        let keys: Vec<&String> = v[0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["r", "density"]);
        assert!(v[0]["density"].is_null());
    }
}
