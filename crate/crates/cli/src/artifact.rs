use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

pub const TOOL: &str = "doslab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped into every artifact.
#[derive(Clone, Debug)]
pub struct Stamp {
    pub command: String,
    pub config_hash: String,
}

impl Stamp {
    fn header(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("tool".into(), json!(TOOL));
        m.insert("version".into(), json!(VERSION));
        m.insert("command".into(), json!(self.command));
        m.insert("config_hash".into(), json!(self.config_hash));
        m
    }
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// JSON report: the stamp followed by the fields of `body` (or `results`
/// when `body` is not an object).
pub fn write_json(path: Option<&Path>, stamp: &Stamp, body: &impl Serialize) -> Result<(), String> {
    let mut doc = stamp.header();
    match serde_json::to_value(body).map_err(|e| e.to_string())? {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("results".into(), other);
        }
    }
    let mut out = sink(path).map_err(|e| io_err(path, e))?;
    serde_json::to_writer_pretty(&mut out, &Value::Object(doc)).map_err(|e| e.to_string())?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| io_err(path, e))
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// CSV table plus, when written to a file, a `<file>.meta.json` sidecar with
/// the stamp and an optional summary. CSV itself has no comment syntax.
pub fn write_csv(
    path: Option<&Path>,
    stamp: &Stamp,
    summary: Option<Value>,
    table: impl FnOnce(&mut dyn Write) -> doslab_core::Result<()>,
) -> Result<(), String> {
    let mut out = sink(path).map_err(|e| io_err(path, e))?;
    table(&mut out).map_err(|e| e.to_string())?;
    out.flush().map_err(|e| io_err(path, e))?;
    if let Some(p) = path {
        let mut doc = stamp.header();
        doc.insert("table".into(), json!(p.file_name().map(|f| f.to_string_lossy().into_owned())));
        if let Some(s) = summary {
            doc.insert("summary".into(), s);
        }
        let meta = meta_path(p);
        let text = serde_json::to_string_pretty(&Value::Object(doc)).map_err(|e| e.to_string())?;
        std::fs::write(&meta, text + "\n").map_err(|e| io_err(Some(&meta), e))?;
    }
    Ok(())
}

fn io_err(path: Option<&Path>, e: io::Error) -> String {
    match path {
        Some(p) => format!("{}: {e}", p.display()),
        None => format!("stdout: {e}"),
    }
}
