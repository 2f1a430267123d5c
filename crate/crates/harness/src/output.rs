//! CSV and JSON writers for campaign results.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::campaign::{timing_report, Campaign, SummaryRow, TimingRow};
use crate::error::Result;
use crate::grid::{GridRow, LimitRow};
use crate::run::RunResult;

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut w = writer(w);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    write_rows(w, rows)
}

pub fn read_summary_csv<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_timing_csv<W: Write>(w: W, rows: &[TimingRow]) -> Result<()> {
    write_rows(w, rows)
}

/// `t`, one column per error component, then `norm` (the headline error).
pub fn write_errors_csv<W: Write>(w: W, run: &RunResult, names: &[String]) -> Result<()> {
    let mut w = writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    header.push("norm".into());
    w.write_record(&header)?;
    for ((t, e), h) in run.times.iter().zip(&run.errors).zip(&run.headline) {
        let mut row = Vec::with_capacity(header.len());
        row.push(t.to_string());
        row.extend(e.iter().map(|v| v.to_string()));
        row.push(h.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the grid to `path` and the limits next to it as `<stem>_limits.csv`.
pub fn write_grid_csv(path: &Path, rows: &[GridRow], limits: &[LimitRow]) -> Result<PathBuf> {
    write_rows(File::create(path)?, rows)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("complexity");
    let limits_path = path.with_file_name(format!("{stem}_limits.csv"));
    write_rows(File::create(&limits_path)?, limits)?;
    Ok(limits_path)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub scenario: String,
    pub summary: Vec<SummaryRow>,
    pub timing: Vec<TimingRow>,
    pub failures: Vec<RunFailure>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunFailure {
    pub filter: Option<String>,
    pub seed: u64,
    pub message: String,
}

/// `summary.csv`, `summary.json`, `timing.csv` and one
/// `errors_<filter>_<seed>.csv` per run.
pub fn write_campaign(dir: &Path, campaign: &Campaign, names: &[String]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_summary_csv(File::create(dir.join("summary.csv"))?, &campaign.summary)?;
    let timing = timing_report(&campaign.summary).unwrap_or_default();
    write_timing_csv(File::create(dir.join("timing.csv"))?, &timing)?;
    for run in &campaign.runs {
        let name = format!("errors_{}_{}.csv", run.filter, run.seed);
        write_errors_csv(File::create(dir.join(name))?, run, names)?;
    }
    let mut failures: Vec<RunFailure> = campaign
        .seed_failures
        .iter()
        .map(|f| RunFailure {
            filter: None,
            seed: f.seed,
            message: f.message.clone(),
        })
        .collect();
    failures.extend(campaign.runs.iter().filter_map(|r| {
        r.failure.as_ref().map(|m| RunFailure {
            filter: Some(r.filter.to_string()),
            seed: r.seed,
            message: m.clone(),
        })
    }));
    let doc = SummaryDocument {
        scenario: campaign.scenario.clone(),
        summary: campaign.summary.clone(),
        timing,
        failures,
    };
    let mut f = File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, &doc)?;
    f.write_all(b"\n")?;
    Ok(())
}
