//! JSON and CSV output with round-trip float formatting.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::Result;
use crate::seqlim::TracePoint;

/// Formats a finite float with 17 significant digits; non-finite values become `null`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

/// Wraps a serde_json formatter and rewrites every float with [`format_f64`].
pub struct SigDigits<F>(pub F);

impl<F: Formatter> Formatter for SigDigits<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn serialize_with<T: Serialize + ?Sized, F: Formatter>(value: &T, fmt: F) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits(fmt));
    value.serialize(&mut ser).map_err(|e| crate::Error::Io(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Compact single-line JSON.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serialize_with(value, CompactFormatter)
}

/// Indented JSON.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serialize_with(value, PrettyFormatter::new())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// CSV with header and one row per record; floats use [`format_f64`] with an
/// empty cell for non-finite values.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|&v| if v.is_finite() { format_f64(v) } else { String::new() })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `n,value,accelerated` rows of a limit trace.
pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("n,value,accelerated\n");
    for t in trace {
        let acc = t.accelerated.filter(|a| a.is_finite()).map(format_f64).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", t.n, format_f64(t.value), acc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        b: Vec<f64>,
        n: u64,
    }

    #[test]
    fn floats_round_trip_exactly() {
        let s = Sample { a: 0.1 + 0.2, b: vec![std::f64::consts::PI, -1e-300, 5.0], n: 3 };
        let text = to_json(&s).unwrap();
        assert!(text.contains("\"n\":3"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["a"].as_f64().unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(back["b"][0].as_f64().unwrap(), std::f64::consts::PI);
        for v in [-1e-300, 5e-324, f64::MAX, 1.0 / 3.0] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(format_f64(f64::NAN), "null");
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn pretty_is_valid_json() {
        let text = to_json_pretty(&Sample { a: f64::INFINITY, b: vec![], n: 0 }).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(back["a"].is_null());
    }

    #[test]
    fn trace_rows() {
        let t = [
            TracePoint { n: 1, value: 2.0, accelerated: None },
            TracePoint { n: 2, value: 1.5, accelerated: Some(1.25) },
        ];
        let csv = trace_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,value,accelerated");
        assert_eq!(lines[1], "1,2.0000000000000000e0,");
        assert_eq!(lines[2], "2,1.5000000000000000e0,1.2500000000000000e0");
        assert_eq!(csv_table(&["x", "y"], &[vec![1.0, f64::NAN]]), "x,y\n1.0000000000000000e0,\n");
    }
}
