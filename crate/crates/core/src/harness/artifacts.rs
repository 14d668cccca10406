use std::fs;
use std::path::Path;

use super::{HarnessError, RunReport};

pub const RUN_HEADER: &str =
    "iter,selected_index,eig,exact_ig,total_entropy_before,total_entropy_after,wall_ms";
pub const SCATTER_HEADER: &str = "eig,exact_ig";
pub const LABELS_HEADER: &str = "index,a,b,label";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes rows (already stringified) under `header`. The header is written
/// even when there are no rows.
fn write_csv(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(header.split(','))?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes `run.csv`, `scatter.csv`, `labels.csv` and `report.json` into
/// `output_dir`, creating it if needed. Existing files are overwritten.
pub fn emit_artifacts(report: &RunReport, output_dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(output_dir).map_err(io_err(output_dir))?;

    write_csv(
        &output_dir.join("run.csv"),
        RUN_HEADER,
        report.rows.iter().map(|r| {
            vec![
                r.iter.to_string(),
                r.selected_index.to_string(),
                r.eig.to_string(),
                r.exact_ig.to_string(),
                r.total_entropy_before.to_string(),
                r.total_entropy_after.to_string(),
                r.wall_ms.to_string(),
            ]
        }),
    )?;
    write_csv(
        &output_dir.join("scatter.csv"),
        SCATTER_HEADER,
        report
            .rows
            .iter()
            .map(|r| vec![r.eig.to_string(), r.exact_ig.to_string()]),
    )?;
    write_csv(
        &output_dir.join("labels.csv"),
        LABELS_HEADER,
        report.labels.iter().enumerate().map(|(i, l)| {
            vec![
                i.to_string(),
                report.posterior_a[i].to_string(),
                report.posterior_b[i].to_string(),
                l.to_string(),
            ]
        }),
    )?;
    let json_path = output_dir.join("report.json");
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    fs::write(&json_path, json).map_err(io_err(&json_path))?;
    Ok(())
}
