//! Deterministic JSON emission: floats are printed in scientific notation
//! with 17 significant digits so that values round-trip exactly and repeated
//! runs produce byte-identical reports.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

struct Sci17;

impl Formatter for Sci17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:.8e}")
    }

    // integers keep the compact default
    fn write_u64<W: ?Sized + Write>(&mut self, writer: &mut W, value: u64) -> io::Result<()> {
        CompactFormatter.write_u64(writer, value)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut serializer = Serializer::with_formatter(&mut out, Sci17);
    value
        .serialize(&mut serializer)
        .expect("report serialization cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Print the report to stdout, or write it to the requested file.
pub fn emit<T: Serialize>(value: &T, json_path: Option<&Path>) -> io::Result<()> {
    let mut text = to_json_string(value);
    text.push('\n');
    match json_path {
        Some(path) => std::fs::write(path, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}
