use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::{CliError, CliResult};

/// Writes artifacts into one directory, each with the provenance header.
pub struct Output {
    dir: PathBuf,
    header: Vec<String>,
    written: Vec<PathBuf>,
}

/// Drops `--out <dir>` and `--out=<dir>` so reruns into another directory
/// produce identical files.
fn command_line(args: &[OsString]) -> String {
    let mut parts = Vec::new();
    let mut skip = false;
    for a in args.iter().map(|a| a.to_string_lossy()) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        parts.push(a.into_owned());
    }
    if let Some(first) = parts.first_mut() {
        if let Some(name) = Path::new(first.as_str()).file_name() {
            *first = name.to_string_lossy().into_owned();
        }
    }
    parts.join(" ")
}

impl Output {
    pub fn new(dir: &Path, args: &[OsString], seed: u64) -> CliResult<Self> {
        Ok(Output {
            dir: dir.to_path_buf(),
            header: vec![
                format!("surfloss {}", env!("CARGO_PKG_VERSION")),
                format!("command: {}", command_line(args)),
                format!("seed: {seed}"),
            ],
            written: Vec::new(),
        })
    }

    pub fn header_lines(&self) -> &[String] {
        &self.header
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, name: &str, body: String) -> CliResult<PathBuf> {
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::Core(surfloss::Error::Io { path: self.dir.clone(), source: e }))?;
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Core(surfloss::Error::Io { path: path.clone(), source: e }))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV with `#` comment lines in front.
    pub fn csv(&mut self, name: &str, body: &str) -> CliResult<PathBuf> {
        let mut s: String = self.header.iter().map(|h| format!("# {h}\n")).collect();
        s.push_str(body);
        self.write(name, s)
    }

    /// SVG with the header in a leading `<desc>` element.
    pub fn svg(&mut self, name: &str, body: &str) -> CliResult<PathBuf> {
        let desc = self.header.join(" | ").replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let s = match body.find('>') {
            Some(i) => format!("{}\n<desc>{desc}</desc>{}", &body[..=i], &body[i + 1..]),
            None => body.to_string(),
        };
        self.write(name, s)
    }

    /// Markdown with the header as an HTML comment.
    pub fn markdown(&mut self, name: &str, body: &str) -> CliResult<PathBuf> {
        let s = format!("<!-- {} -->\n{body}", self.header.join(" | "));
        self.write(name, s)
    }
}
