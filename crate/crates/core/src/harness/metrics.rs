use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Line-delimited JSON metrics file.
pub struct MetricsSink {
    out: Option<BufWriter<File>>,
}

impl MetricsSink {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            out: Some(BufWriter::new(file)),
        })
    }

    /// Sink that discards everything.
    pub fn disabled() -> Self {
        Self { out: None }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        if let Some(out) = &mut self.out {
            serde_json::to_writer(&mut *out, record)?;
            out.write_all(b"\n").map_err(|e| Error::io("metrics", e))?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(out) = &mut self.out {
            out.flush().map_err(|e| Error::io("metrics", e))?;
        }
        Ok(())
    }
}
