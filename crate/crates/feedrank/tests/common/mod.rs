#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub const TOY_QUERY: &str = "killing a running thread in java";
pub const TOY_SEED_QUERY: &str = "Stopping looping thread in Java";
pub const INTERRUPT: &str = "java.lang.Thread.interrupt";

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// Copies a shipped fixture into a scratch directory so tests can write the
/// log and model files.
pub fn scratch_copy(name: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(data(name)).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    dir
}
