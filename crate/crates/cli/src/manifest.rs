use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use v2x_core::ScenarioConfig;

pub const FILE_NAME: &str = "manifest.txt";

/// Run record written next to the outputs. Metadata sits on `#` lines and
/// the resolved config follows as `key = value` lines, so the file can be
/// passed back through `--config` to reproduce the run.
pub struct Manifest<'a> {
    pub command: &'a str,
    pub precision: &'a str,
    pub threads: usize,
    pub wall_clock_s: f64,
    pub outputs: Vec<PathBuf>,
    pub config: &'a ScenarioConfig,
}

impl Manifest<'_> {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# v2x {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# precision: {}", self.precision);
        let _ = writeln!(s, "# threads: {}", self.threads);
        let _ = writeln!(s, "# wall_clock_s: {:.3}", self.wall_clock_s);
        for p in &self.outputs {
            let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            let _ = writeln!(s, "# output: {name}");
        }
        s.push_str(&self.config.to_text());
        s
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(FILE_NAME);
        fs::write(&path, self.render()).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
