//! On-disk parameter storage: a `key = value` text manifest next to a flat
//! little-endian array of every parameter.

use std::fs;
use std::path::Path;

use super::real::{Precision, Real};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Ordered `key = value` manifest.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Checkpoint(format!("manifest is missing '{key}'")))
    }

    pub fn parse_value<V: std::str::FromStr>(&self, key: &str) -> Result<V> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Checkpoint(format!("manifest entry '{key}' has bad value '{raw}'")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut manifest = Manifest::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            manifest.set(k.trim(), v.trim());
        }
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Human-readable list of keys whose values differ between two manifests.
    pub fn diff(&self, other: &Manifest) -> String {
        let mut lines = Vec::new();
        for (k, v) in &self.entries {
            match other.get(k) {
                Some(o) if o == v => {}
                Some(o) => lines.push(format!("{k}: {v} != {o}")),
                None => lines.push(format!("{k}: {v} != <missing>")),
            }
        }
        for (k, v) in &other.entries {
            if self.get(k).is_none() {
                lines.push(format!("{k}: <missing> != {v}"));
            }
        }
        lines.join("; ")
    }

    /// Checks `format_version` and `precision` against what the caller
    /// expects.
    pub fn check_header(&self, precision: Precision) -> Result<()> {
        let version: u32 = self.parse_value("format_version")?;
        if version != FORMAT_VERSION {
            return Err(Error::ManifestMismatch(format!(
                "format_version: {version} != {FORMAT_VERSION}"
            )));
        }
        let found = self.require("precision")?;
        if found != precision.as_str() {
            return Err(Error::ManifestMismatch(format!(
                "precision: {found} != {}",
                precision.as_str()
            )));
        }
        Ok(())
    }
}

pub fn encode_params<T: Real>(params: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(params.len() * T::PRECISION.byte_width());
    for &p in params {
        p.write_le(&mut out);
    }
    out
}

pub fn decode_params<T: Real>(bytes: &[u8]) -> Result<Vec<T>> {
    let width = T::PRECISION.byte_width();
    if bytes.len() % width != 0 {
        return Err(Error::Checkpoint(format!(
            "parameter file length {} is not a multiple of {width}",
            bytes.len()
        )));
    }
    Ok(bytes.chunks_exact(width).map(T::read_le).collect())
}

pub fn write_params<T: Real>(path: &Path, params: &[T]) -> Result<()> {
    fs::write(path, encode_params(params)).map_err(|e| Error::io(path, e))
}

pub fn read_params<T: Real>(path: &Path, expected: usize) -> Result<Vec<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let params = decode_params(&bytes)?;
    if params.len() != expected {
        return Err(Error::ManifestMismatch(format!(
            "param_count: manifest says {expected}, file holds {}",
            params.len()
        )));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn manifest_text_round_trip_and_diff() {
        let mut m = Manifest::new();
        m.set("format_version", FORMAT_VERSION);
        m.set("precision", "f32");
        m.set("topology", "3x2:relu");
        let parsed = Manifest::from_text(&m.to_text()).unwrap();
        assert_eq!(parsed, m);
        parsed.check_header(Precision::F32).unwrap();
        assert!(parsed.check_header(Precision::F64).is_err());

        let mut other = m.clone();
        other.set("topology", "3x4:relu");
        assert_eq!(m.diff(&other), "topology: 3x2:relu != 3x4:relu");
    }

    #[test]
    fn truncated_parameter_file_is_rejected() {
        assert!(decode_params::<f32>(&[0, 1, 2]).is_err());
    }

    #[test]
    fn missing_file_is_a_structured_error() {
        let err = read_params::<f32>(Path::new("/nonexistent/params.bin"), 3).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    proptest! {
        #[test]
        fn params_round_trip_bit_exact(v in prop::collection::vec(any::<f32>(), 0..64)) {
            let back = decode_params::<f32>(&encode_params(&v)).unwrap();
            prop_assert_eq!(
                back.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                v.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
