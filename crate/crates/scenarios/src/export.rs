//! CSV export of simulated runs and JSON config loading.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::Result;
use crate::scenario::ScenarioData;

/// One row per epoch: `t`, the truth components, `n_meas`, then `z0..`.
/// Epochs with fewer measurements than the widest one leave trailing
/// fields empty.
pub fn write_run_csv<W: Write>(writer: W, data: &ScenarioData, state_names: &[String]) -> Result<()> {
    let width = data.epochs.iter().map(|e| e.z.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);

    let mut header = vec!["t".to_string()];
    header.extend(state_names.iter().cloned());
    header.push("n_meas".into());
    header.extend((0..width).map(|i| format!("z{i}")));
    w.write_record(&header)?;

    for e in &data.epochs {
        let mut row = Vec::with_capacity(header.len());
        row.push(e.t.to_string());
        row.extend(e.truth.iter().map(|v| v.to_string()));
        row.push(e.z.len().to_string());
        row.extend(e.z.iter().map(|v| v.to_string()));
        row.resize(header.len(), String::new());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_run_csv_file(path: &Path, data: &ScenarioData, state_names: &[String]) -> Result<()> {
    write_run_csv(File::create(path)?, data, state_names)
}

pub fn read_json_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
