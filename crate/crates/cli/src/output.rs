//! Output staging: every file is fully built in memory, then committed via
//! write-to-temp and rename so no partial file is ever visible.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::CliResult;

pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    /// Adds `run_meta.json` recording the command, crate version, seed, and
    /// the SHA-256 of the resolved configuration.
    pub fn add_run_meta<C: serde::Serialize>(
        &mut self,
        command: &str,
        config: &C,
        seed: Option<u64>,
        notes: &[String],
    ) {
        let resolved = serde_json::to_string_pretty(config).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(resolved.as_bytes());
        let digest = hasher.finalize();
        let mut hash = String::with_capacity(64);
        for byte in digest {
            write!(hash, "{byte:02x}").unwrap();
        }
        let meta = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config_sha256": hash,
            "config": serde_json::from_str::<serde_json::Value>(&resolved).unwrap(),
            "notes": notes,
        });
        self.add(
            "run_meta.json",
            serde_json::to_string_pretty(&meta).unwrap() + "\n",
        );
    }

    /// Commits every staged file.
    pub fn commit(self) -> CliResult<()> {
        fs::create_dir_all(&self.dir).map_err(anyhow::Error::from)?;
        for (name, content) in &self.files {
            let tmp = self.dir.join(format!(".tmp-{name}"));
            let final_path = self.dir.join(name);
            fs::write(&tmp, content).map_err(anyhow::Error::from)?;
            fs::rename(&tmp, &final_path).map_err(anyhow::Error::from)?;
        }
        Ok(())
    }
}
