//! File formats: trial-log and condition-table CSVs (with a leading
//! `# format_version=1` comment line) and JSON reports.

use crate::aggregation::{ConditionStats, TrialRecord};
use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# format_version={FORMAT_VERSION}")?;
    let mut writer = csv::Writer::from_writer(file);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(BufReader::new(File::open(path)?));
    let mut out = Vec::new();
    for (i, record) in reader.into_deserialize().enumerate() {
        let r: T = record.map_err(|e| {
            Error::Format(format!("{}: record {}: {e}", path.display(), i + 1))
        })?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_trials(path: &Path, trials: &[TrialRecord]) -> Result<()> {
    write_csv(path, trials)
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    read_csv(path)
}

pub fn write_conditions(path: &Path, conditions: &[ConditionStats]) -> Result<()> {
    write_csv(path, conditions)
}

pub fn read_conditions(path: &Path) -> Result<Vec<ConditionStats>> {
    read_csv(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    writeln!(file)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = BufReader::new(File::open(path)?);
    serde_json::from_reader(file).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
