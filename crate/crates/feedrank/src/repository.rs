//! Append-only feedback log backed by a JSON Lines file.

use std::fs::{self, File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use feedrank_core::{FeedbackRecord, FeedbackRepository};

use crate::error::{AppError, Result};
use crate::formats::{feedback_from_line, feedback_to_line};

/// Parses a log. A final line without a newline that fails to parse is the
/// remains of an interrupted append and is dropped; any other bad line is an
/// error. Returns the records and the byte length of the valid prefix.
pub fn parse_log(text: &str, path: &Path) -> Result<(Vec<FeedbackRecord>, usize)> {
    let mut records = Vec::new();
    let mut offset = 0;
    let mut valid = 0;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        offset += raw.len();
        let terminated = raw.ends_with('\n');
        let line = raw.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            valid = offset;
            continue;
        }
        match feedback_from_line(line) {
            Ok(r) => {
                records.push(r);
                valid = offset;
            }
            Err(msg) if terminated => return Err(AppError::format(path, i + 1, msg)),
            Err(_) => {
                log::warn!("{}: dropping truncated last line {}", path.display(), i + 1);
            }
        }
    }
    Ok((records, valid))
}

/// Loads a log without opening it for writing. A missing file is an empty
/// repository.
pub fn load(path: &Path) -> Result<FeedbackRepository> {
    match fs::read_to_string(path) {
        Ok(text) => {
            let (records, _) = parse_log(&text, path)?;
            Ok(FeedbackRepository::from_records(records)?)
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(FeedbackRepository::new()),
        Err(e) => Err(AppError::io(path, e)),
    }
}

/// The single writer of a feedback log. Every append reaches the disk before
/// it is visible in memory.
#[derive(Debug)]
pub struct FeedbackLog {
    path: PathBuf,
    file: File,
    repo: FeedbackRepository,
}

impl FeedbackLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(AppError::io(&path, e)),
        };
        let (records, valid) = parse_log(&text, &path)?;
        let repo = FeedbackRepository::from_records(records)?;
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .write(true)
            .truncate(false)
            .open(&path)
            .map_err(|e| AppError::io(&path, e))?;
        let io = |e| AppError::io(&path, e);
        if valid < text.len() {
            file.set_len(valid as u64).map_err(io)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io)?;
        if valid > 0 && !text[..valid].ends_with('\n') {
            file.write_all(b"\n").map_err(io)?;
        }
        Ok(Self { path, file, repo })
    }

    pub fn append(&mut self, record: FeedbackRecord) -> Result<()> {
        record.validate()?;
        let mut line = feedback_to_line(&record);
        line.push('\n');
        let io = |e| AppError::io(&self.path, e);
        self.file.write_all(line.as_bytes()).map_err(io)?;
        self.file.flush().map_err(io)?;
        self.file.sync_data().map_err(io)?;
        self.repo.append(record)?;
        Ok(())
    }

    pub fn records(&self) -> &[FeedbackRecord] {
        self.repo.records()
    }

    pub fn repository(&self) -> &FeedbackRepository {
        &self.repo
    }

    pub fn len(&self) -> usize {
        self.repo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.repo.is_empty()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
