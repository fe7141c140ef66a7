//! File plumbing: atomic writes, JSONL encoding, and content digests.

use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest as _, Sha256};

/// Write bytes to `path` via a temporary file in the same directory, then rename.
///
/// Readers never observe a half-written file; reruns replace outputs atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            fs::create_dir_all(p)?;
            p
        }
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Encode items as JSON Lines: one compact JSON document per line.
pub fn to_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> serde_json::Result<Vec<u8>> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

/// Decode a JSONL string into typed records, skipping blank lines.
pub fn from_jsonl<T: serde::de::DeserializeOwned>(text: &str) -> serde_json::Result<Vec<T>> {
    text.lines()
        .filter(|line| !line.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Hex SHA-256 digest, used in manifests and reproducibility checks.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with 4-space indentation, the layout used inside prompts.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
