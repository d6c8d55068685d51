//! Deterministic CSV and key-value writers.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use adaptmc::samplers::ChainTrace;

/// Shortest round-trip decimal form of a binary64 value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_owned()
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Creates `path`, including missing parent directories.
pub fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// `prefix` with `suffix` appended to the final component.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `step,accepted,move_kind,x_0..x_{d-1}`, keeping only steps that
/// are multiples of `thinning` and later than `skip_through`.
pub fn write_trace(path: &Path, trace: &ChainTrace, thinning: usize, skip_through: usize) -> io::Result<()> {
    let mut w = create(path)?;
    let d = trace.dim();
    let mut header = String::from("step,accepted,move_kind");
    for i in 0..d {
        header.push_str(&format!(",x_{i}"));
    }
    writeln!(w, "{header}")?;
    let mut buf = ryu::Buffer::new();
    for (i, x) in trace.states.iter().enumerate() {
        let step = trace.step_offset + i;
        if step <= skip_through || !step.is_multiple_of(thinning) {
            continue;
        }
        write!(w, "{step},{},{}", u8::from(trace.accepted[i]), trace.move_kind[i])?;
        for v in x.iter() {
            if v.is_finite() {
                write!(w, ",{}", buf.format_finite(*v))?;
            } else {
                write!(w, ",{}", fmt_f64(*v))?;
            }
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Writes a CSV with the given header and pre-formatted rows.
pub fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()
}

/// Ordered `key=value` lines.
#[derive(Debug, Default, Clone)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) {
        self.entries.push((key.into(), fmt_f64(value)));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut w = create(path)?;
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        w.flush()
    }
}
