//! Artifact writers. Every file carries the schema, the tool version and the
//! resolved configuration; a `manifest.json` lists the files with SHA-256.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub file: String,
    pub schema: String,
    pub sha256: String,
    pub bytes: usize,
}

pub struct Emitter {
    dir: PathBuf,
    command: String,
    config: serde_json::Value,
    artifacts: Vec<Artifact>,
}

fn schema(kind: &str) -> String {
    format!("nlre/{kind}/1")
}

pub fn hex_sha(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Write `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(CliError::io(&tmp))?;
    f.write_all(bytes).map_err(CliError::io(&tmp))?;
    f.sync_all().map_err(CliError::io(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(CliError::io(path))
}

impl Emitter {
    pub fn new(dir: &Path, command: &str, config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        let config = serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config,
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn commit(&mut self, file: &str, kind: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(file);
        write_atomic(&path, bytes)?;
        self.artifacts.push(Artifact {
            file: file.to_string(),
            schema: schema(kind),
            sha256: hex_sha(bytes),
            bytes: bytes.len(),
        });
        Ok(path)
    }

    fn header_lines(&self, kind: &str) -> Vec<String> {
        vec![
            format!("schema {}", schema(kind)),
            format!("tool_version {TOOL_VERSION}"),
            format!("command {}", self.command),
            format!("config {}", self.config),
        ]
    }

    /// `{schema, tool_version, command, config, result}` as pretty JSON.
    pub fn json<T: Serialize>(&mut self, file: &str, kind: &str, result: &T) -> Result<PathBuf, CliError> {
        let doc = json!({
            "schema": schema(kind),
            "tool_version": TOOL_VERSION,
            "command": self.command,
            "config": self.config,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.commit(file, kind, text.as_bytes())
    }

    /// CSV with `# ` metadata lines followed by the header row.
    pub fn csv<R, V>(&mut self, file: &str, kind: &str, header: &[&str], rows: R) -> Result<PathBuf, CliError>
    where
        R: IntoIterator<Item = Vec<V>>,
        V: Display,
    {
        let mut buf = Vec::new();
        for line in self.header_lines(kind) {
            buf.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::Config(e.to_string());
            w.write_record(header).map_err(fail)?;
            for row in rows {
                w.write_record(row.iter().map(|v| v.to_string())).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::Io {
                path: file.to_string(),
                source: e,
            })?;
        }
        self.commit(file, kind, &buf)
    }

    /// Plain text whose format accepts `#` comments.
    pub fn text(&mut self, file: &str, kind: &str, body: &str) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        for line in self.header_lines(kind) {
            text.push_str("# ");
            text.push_str(&line);
            text.push('\n');
        }
        text.push_str(body);
        self.commit(file, kind, text.as_bytes())
    }

    /// Entries of an existing manifest whose files are still intact and
    /// were not rewritten by this run.
    fn previous_entries(&self) -> Vec<Artifact> {
        let Ok(bytes) = fs::read(self.dir.join(MANIFEST)) else {
            return Vec::new();
        };
        let Ok(doc) = serde_json::from_slice::<serde_json::Value>(&bytes) else {
            return Vec::new();
        };
        let Some(list) = doc.get("artifacts").and_then(|a| a.as_array()) else {
            return Vec::new();
        };
        list.iter()
            .filter_map(|a| {
                let file = a.get("file")?.as_str()?.to_string();
                let sha = a.get("sha256")?.as_str()?.to_string();
                if self.artifacts.iter().any(|x| x.file == file) {
                    return None;
                }
                let bytes = fs::read(self.dir.join(&file)).ok()?;
                (hex_sha(&bytes) == sha).then(|| Artifact {
                    file,
                    schema: a.get("schema").and_then(|s| s.as_str()).unwrap_or_default().to_string(),
                    sha256: sha,
                    bytes: bytes.len(),
                })
            })
            .collect()
    }

    /// Write `manifest.json` and return the files written by this run.
    /// Intact entries from an earlier run in the same directory are kept.
    pub fn finish(mut self) -> Result<Vec<Artifact>, CliError> {
        let mut listed = self.previous_entries();
        listed.extend(self.artifacts.iter().cloned());
        let doc = json!({
            "schema": schema("manifest"),
            "tool_version": TOOL_VERSION,
            "command": self.command,
            "config": self.config,
            "artifacts": listed,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.dir.join(MANIFEST), text.as_bytes())?;
        Ok(std::mem::take(&mut self.artifacts))
    }
}

/// Data rows of a CSV written by [`Emitter::csv`], as strings.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let header = r
        .headers()
        .map_err(|e| CliError::Config(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}
