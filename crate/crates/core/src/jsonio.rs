//! Byte-stable JSON artifacts.
//!
//! Result files must be reproducible byte for byte under a fixed seed, so
//! floats are written with a fixed 17-significant-digit scientific format
//! (enough to round-trip any f64 exactly) instead of the default
//! shortest-representation encoder, and field order follows the struct
//! declaration order that serde derives preserve.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::error::Result;

/// Compact JSON with floats as `d.dddddddddddddddde±x` (17 significant digits).
struct FixedFloatFormatter;

impl Formatter for FixedFloatFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        // serde_json turns non-finite floats into null before reaching the
        // formatter, so only finite values arrive here.
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes a value into byte-stable artifact JSON (single line).
pub fn to_artifact_json<T: Serialize>(value: &T) -> Result<String> {
    let mut bytes = Vec::new();
    let mut serializer = Serializer::with_formatter(&mut bytes, FixedFloatFormatter);
    value.serialize(&mut serializer)?;
    Ok(String::from_utf8(bytes).expect("serde_json emits UTF-8"))
}

/// Writes artifact JSON plus a trailing newline to `path`.
pub fn write_artifact_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_artifact_json(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
