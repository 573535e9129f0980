//! Append-only store of captured medication-history records.
//!
//! One JSON object per line. Each append is flushed and synced before it is
//! acknowledged. On open the file is replayed; a final line cut short by a
//! crash (no trailing newline) is dropped and truncated away, since it was
//! never acknowledged. Complete lines are never rewritten.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, PoisonError, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use rxhistory_core::capture::{MappingLevel, MedicationHistoryEntry};

/// One captured entry with the mapping computed when it was recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredEntryRecord {
    pub record_id: Uuid,
    pub recorded_at: DateTime<Utc>,
    pub entry: MedicationHistoryEntry,
    pub mapping: MappingLevel,
}

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: line {line}: {source}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Decode one journal line (without its newline).
pub fn parse_record(line: &str) -> Result<StoredEntryRecord, serde_json::Error> {
    serde_json::from_str(line)
}

pub fn encode_record(record: &StoredEntryRecord) -> String {
    serde_json::to_string(record).expect("records serialize")
}

#[derive(Default)]
struct Index {
    records: Vec<StoredEntryRecord>,
    by_patient: HashMap<String, Vec<usize>>,
}

impl Index {
    fn push(&mut self, record: StoredEntryRecord) {
        self.by_patient
            .entry(record.entry.patient_ref.clone())
            .or_default()
            .push(self.records.len());
        self.records.push(record);
    }
}

pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
    index: RwLock<Index>,
}

impl std::fmt::Debug for Journal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Journal")
            .field("path", &self.path)
            .finish_non_exhaustive()
    }
}

impl Journal {
    /// Open or create the journal at `path` and replay it.
    pub fn open(path: &Path) -> Result<Self, JournalError> {
        let io_err = |source| JournalError::Io {
            path: path.to_owned(),
            source,
        };
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io_err)?;

        let mut index = Index::default();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&file);
        let mut line = String::new();
        let mut line_no = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(io_err)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            if !line.ends_with('\n') {
                log::warn!(
                    "{}: dropping unterminated final line {line_no} ({n} bytes)",
                    path.display()
                );
                break;
            }
            let text = line.trim_end_matches(['\n', '\r']);
            if !text.trim().is_empty() {
                let record = parse_record(text).map_err(|source| JournalError::Corrupt {
                    path: path.to_owned(),
                    line: line_no,
                    source,
                })?;
                index.push(record);
            }
            good_len += n as u64;
        }
        drop(reader);
        if file.metadata().map_err(io_err)?.len() != good_len {
            file.set_len(good_len).map_err(io_err)?;
            file.sync_all().map_err(io_err)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io_err)?;
        Ok(Journal {
            path: path.to_owned(),
            file: Mutex::new(file),
            index: RwLock::new(index),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Durably append one record. Appends are serialized.
    pub fn append(&self, record: StoredEntryRecord) -> Result<(), JournalError> {
        let mut line = encode_record(&record);
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(PoisonError::into_inner);
        let io_err = |source| JournalError::Io {
            path: self.path.clone(),
            source,
        };
        file.write_all(line.as_bytes()).map_err(io_err)?;
        file.sync_data().map_err(io_err)?;
        self.index.write().unwrap_or_else(PoisonError::into_inner).push(record);
        Ok(())
    }

    /// A patient's records in the order they were recorded.
    pub fn for_patient(&self, patient_ref: &str) -> Vec<StoredEntryRecord> {
        let index = self.index.read().unwrap_or_else(PoisonError::into_inner);
        index
            .by_patient
            .get(patient_ref)
            .map(|ids| ids.iter().map(|&i| index.records[i].clone()).collect())
            .unwrap_or_default()
    }

    /// All records in the order they were recorded.
    pub fn records(&self) -> Vec<StoredEntryRecord> {
        self.index
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .records
            .clone()
    }

    pub fn len(&self) -> usize {
        self.index.read().unwrap_or_else(PoisonError::into_inner).records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
