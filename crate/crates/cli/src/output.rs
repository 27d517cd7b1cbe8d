//! Artifact writing: every file carries the config hash and seed, gets a metadata
//! sidecar, and is removed again if the command fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub struct Output {
    dir: PathBuf,
    hash: String,
    seed: u64,
    command: String,
    written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Meta<'a> {
    file: &'a str,
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    created_unix: u64,
    version: &'a str,
    threads: usize,
}

impl Output {
    pub fn new(dir: &Path, hash: &str, seed: u64, command: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            seed,
            command: command.to_string(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `# config_hash=… seed=…` line used by CSV files.
    pub fn stamp(&self) -> String {
        format!("# config_hash={} seed={}", self.hash, self.seed)
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> std::io::Result<()> {
        let mut body = format!("{}\n{header}\n", self.stamp());
        for r in rows {
            body.push_str(r);
            body.push('\n');
        }
        self.file(name, &body)
    }

    /// SVG and markdown embed the stamp as a comment.
    pub fn commented(&mut self, name: &str, content: &str) -> std::io::Result<()> {
        let stamp = format!("<!-- config_hash={} seed={} -->", self.hash, self.seed);
        let body = match content.split_once('\n') {
            // Keep an XML prolog or root tag first.
            Some((first, rest)) if first.starts_with("<svg") || first.starts_with("<?xml") => {
                format!("{first}\n{stamp}\n{rest}")
            }
            _ => format!("{stamp}\n{content}"),
        };
        self.file(name, &body)
    }

    pub fn json(&mut self, name: &str, value: &serde_json::Value) -> std::io::Result<()> {
        let wrapped = serde_json::json!({
            "config_hash": self.hash,
            "seed": self.seed,
            "data": value,
        });
        let text = serde_json::to_string_pretty(&wrapped).expect("json serializes") + "\n";
        self.file(name, &text)
    }

    fn file(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, body)?;
        let meta_path = self.dir.join(format!("{name}.meta.json"));
        self.written.push(meta_path.clone());
        let meta = Meta {
            file: name,
            command: &self.command,
            config_hash: &self.hash,
            seed: self.seed,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            version: env!("CARGO_PKG_VERSION"),
            threads: rayon::current_num_threads(),
        };
        fs::write(meta_path, serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n")
    }

    /// Deletes everything this run wrote.
    pub fn discard(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }

    pub fn files(&self) -> impl Iterator<Item = &Path> {
        self.written.iter().map(PathBuf::as_path).filter(|p| !p.to_string_lossy().ends_with(".meta.json"))
    }
}
