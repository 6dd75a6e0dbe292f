//! Deterministic CSV/report output: fixed 12-significant-digit formatting,
//! `NA` for undefined values, `inf` for infinite parameters.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

/// Format a value to 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "NA".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.11e}")
}

/// Format an optional value, `NA` when undefined.
pub fn sig12_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), sig12)
}

/// Render a parameter that may be infinite the way configs spell it.
pub fn param(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Either stdout or a file, buffered.
pub struct Out {
    inner: BufWriter<Box<dyn Write>>,
}

impl Out {
    pub fn create(path: &Option<PathBuf>) -> io::Result<Self> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout()),
        };
        Ok(Self {
            inner: BufWriter::new(sink),
        })
    }

    pub fn line(&mut self, s: &str) -> io::Result<()> {
        writeln!(self.inner, "{s}")
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.inner.flush()
    }
}
