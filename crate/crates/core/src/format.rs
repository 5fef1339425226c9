//! Shared binary container: 8-byte magic, little-endian `u64` manifest
//! length, UTF-8 manifest, then little-endian `f64` payload.

use std::io::Write;

use crate::error::{Error, Result};

pub(crate) fn encode(magic: &[u8; 8], manifest: &str, payload: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + manifest.len() + 8 * payload.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
    out.extend_from_slice(manifest.as_bytes());
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    Ok(())
}

/// Splits a container into its manifest and payload reader.
pub(crate) fn decode<'a>(magic: &[u8; 8], bytes: &'a [u8]) -> Result<(&'a str, Payload<'a>)> {
    if bytes.len() < 8 || &bytes[..8] != magic {
        return Err(Error::BadHeader(format!(
            "expected magic {:?}",
            String::from_utf8_lossy(magic).trim_end_matches('\0')
        )));
    }
    if bytes.len() < 16 {
        return Err(Error::Truncated("manifest length".into()));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let end = 16usize
        .checked_add(len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::Truncated("manifest".into()))?;
    let manifest =
        std::str::from_utf8(&bytes[16..end]).map_err(|_| Error::BadHeader("manifest is not UTF-8".into()))?;
    Ok((manifest, Payload { rest: &bytes[end..] }))
}

pub(crate) struct Payload<'a> {
    rest: &'a [u8],
}

impl Payload<'_> {
    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .filter(|&b| b <= self.rest.len())
            .ok_or_else(|| Error::Truncated(format!("payload of {what}")))?;
        let (head, tail) = self.rest.split_at(bytes);
        self.rest = tail;
        Ok(head
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(Error::Corrupt(format!("{} unexpected trailing bytes", self.rest.len())))
        }
    }
}

pub(crate) fn format_shape(shape: &[usize]) -> String {
    if shape.is_empty() {
        return "scalar".into();
    }
    shape.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x")
}

pub(crate) fn parse_shape(s: &str) -> Result<Vec<usize>> {
    if s == "scalar" {
        return Ok(vec![]);
    }
    s.split('x')
        .map(|p| p.parse().map_err(|_| Error::Corrupt(format!("bad shape `{s}`"))))
        .collect()
}

/// `key=value` fields of a whitespace-separated manifest line.
pub(crate) fn fields(line: &str) -> impl Iterator<Item = (&str, &str)> {
    line.split_whitespace().filter_map(|f| f.split_once('='))
}

pub(crate) fn field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    fields(line)
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
        .ok_or_else(|| Error::Corrupt(format!("manifest line `{line}` lacks `{key}`")))
}
