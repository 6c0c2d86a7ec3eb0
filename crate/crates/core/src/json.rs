//! JSON output where every float carries 17 significant digits.
//!
//! serde_json's default float output is the shortest round-trip form. Reports
//! and exported states instead use a fixed `d.dddddddddddddddde±x` layout so
//! regression diffs line up digit by digit.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// Pretty formatter that writes finite floats as `{:.16e}`.
pub struct Sig17Formatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for Sig17Formatter<'_> {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

impl Formatter for Sig17Formatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

pub fn to_writer_sig17<W: io::Write, T: ?Sized + Serialize>(writer: W, value: &T) -> serde_json::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, Sig17Formatter::default());
    value.serialize(&mut ser)
}

pub fn to_string_sig17<T: ?Sized + Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    to_writer_sig17(&mut buf, value)?;
    // The formatter only emits ASCII.
    Ok(String::from_utf8(buf).expect("formatter output is ASCII"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_string_sig17(&serde_json::json!({"x": 0.25, "n": 3, "z": 0.0})).unwrap();
        assert!(s.contains("2.5000000000000000e-1"), "{s}");
        assert!(s.contains("0.0000000000000000e0"), "{s}");
        assert!(s.contains("\"n\": 3"), "{s}");
    }

    #[test]
    fn output_round_trips_bit_exactly() {
        let xs = vec![std::f64::consts::PI, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE];
        let s = to_string_sig17(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(xs, back);
    }

    #[test]
    fn non_finite_becomes_null() {
        let s = to_string_sig17(&vec![f64::NAN]).unwrap();
        assert!(s.contains("null"));
    }
}
