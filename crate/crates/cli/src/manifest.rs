//! Run manifest written next to every file-producing command.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// Verb followed by the flags as given.
    pub command: Vec<String>,
    /// sha256 of every input file, keyed by path.
    pub input_digests: BTreeMap<String, String>,
    pub tool_version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(argv: &[String]) -> Self {
        RunManifest {
            command: argv.iter().skip(1).cloned().collect(),
            input_digests: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.input_digests
            .insert(path.display().to_string(), hex::encode(Sha256::digest(bytes)));
    }

    pub fn output(&mut self, path: &Path) {
        let p = path.display().to_string();
        if !self.outputs.contains(&p) {
            self.outputs.push(p);
        }
    }
}
