use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

/// SHA-256 of a file's raw bytes, hex-encoded.
pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let bytes = hasher.finalize();
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}

/// Builder for the per-run manifest: command, effective config, seed, input
/// digests, outputs, and wall time. Keys appear in insertion order.
pub struct RunManifest {
    lines: Vec<String>,
    started: std::time::Instant,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut lines = vec!["soclearn-manifest v1".to_string()];
        lines.push(format!("command\t{command}"));
        Self { lines, started: std::time::Instant::now() }
    }

    pub fn config(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.lines.push(format!("{key}\t{value}"));
        self
    }

    pub fn input(&mut self, path: &Path) -> io::Result<&mut Self> {
        let digest = sha256_file(path)?;
        self.lines.push(format!("input\t{}\t{digest}", path.display()));
        Ok(self)
    }

    pub fn output(&mut self, name: &str) -> &mut Self {
        self.lines.push(format!("output\t{name}"));
        self
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        let mut file = File::create(path)?;
        for line in &self.lines {
            writeln!(file, "{line}")?;
        }
        writeln!(file, "wall_time_ms\t{}", self.started.elapsed().as_millis())?;
        Ok(())
    }
}
