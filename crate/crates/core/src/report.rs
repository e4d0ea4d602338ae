//! JSON and CSV output with fixed numeric formatting.
//!
//! Floats are written with 17 significant digits in exponent form so that
//! identical inputs give byte-identical files and values round-trip exactly.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::state::Trajectory;
use crate::Result;

/// `x` with 17 significant digits, e.g. `5.0000000000000000e-1`.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

struct FixedFloats<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_number(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Pretty-printed JSON with fixed float formatting and a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let formatter = FixedFloats {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Header row plus one comma-separated line per row.
pub fn csv_string<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.as_ref().join(","));
        s.push('\n');
    }
    s
}

/// `t,value` table of a trajectory.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let rows: Vec<Vec<String>> = traj
        .times()
        .into_iter()
        .zip(traj.values())
        .map(|(t, &v)| vec![format_number(t), format_number(v)])
        .collect();
    csv_string(&["t", "value"], &rows)
}

pub fn write_trajectory_csv(path: impl AsRef<Path>, traj: &Trajectory) -> Result<()> {
    std::fs::write(path, trajectory_csv(traj))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::make_grid;
    use crate::state::Placement;

    #[derive(Serialize)]
    struct Sample {
        name: &'static str,
        value: f64,
        list: Vec<f64>,
        count: usize,
        missing: Option<f64>,
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = to_json_string(&Sample {
            name: "x",
            value: 0.1,
            list: vec![2.0, -1e-300],
            count: 3,
            missing: None,
        })
        .unwrap();
        assert!(s.contains("\"value\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-1.0000000000000000e-300"));
        assert!(s.contains("\"count\": 3"));
        assert!(s.contains("\"missing\": null"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["value"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn non_finite_becomes_null() {
        let s = to_json_string(&[f64::NAN]).unwrap();
        assert!(s.contains("null"));
    }

    #[test]
    fn trajectory_table() {
        let g = make_grid(1.0, 2).unwrap();
        let t = Trajectory::constant(g, Placement::Midpoints, 2.0);
        assert_eq!(
            trajectory_csv(&t),
            "t,value\n2.5000000000000000e-1,2.0000000000000000e0\n7.5000000000000000e-1,2.0000000000000000e0\n"
        );
    }
}
