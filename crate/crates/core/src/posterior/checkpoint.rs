//! CSV checkpoints: `index,a,b` for binary states, `index,c0,..,cK-1` otherwise.

use std::path::Path;

use super::{PosteriorError, PosteriorState};

/// Header row for a `k`-class checkpoint.
pub fn checkpoint_header(k: usize) -> Vec<String> {
    let mut h = vec!["index".to_string()];
    if k == 2 {
        h.extend(["a".to_string(), "b".to_string()]);
    } else {
        h.extend((0..k).map(|c| format!("c{c}")));
    }
    h
}

fn csv_err(e: csv::Error) -> PosteriorError {
    PosteriorError::Checkpoint(e.to_string())
}

pub fn write_checkpoint(state: &PosteriorState, path: &Path) -> Result<(), PosteriorError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let k = state.num_classes();
    w.write_record(checkpoint_header(k)).map_err(csv_err)?;
    for i in 0..state.len() {
        let mut rec = vec![i.to_string()];
        if k == 2 {
            rec.push(state.a(i).to_string());
            rec.push(state.b(i).to_string());
        } else {
            rec.extend(state.row(i).iter().map(f64::to_string));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint written by [`write_checkpoint`]. Rows must be in index order.
pub fn read_checkpoint(
    path: &Path,
    a_init: f64,
    b_init: f64,
) -> Result<PosteriorState, PosteriorError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let k = header.len().saturating_sub(1);
    if k < 2 || header != checkpoint_header(k) {
        return Err(PosteriorError::Checkpoint(format!(
            "unexpected header `{}`",
            header.join(",")
        )));
    }
    let mut counts = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |j: usize| -> Result<f64, PosteriorError> {
            rec[j]
                .parse()
                .map_err(|e| PosteriorError::Checkpoint(format!("row {row}, column {j}: {e}")))
        };
        if field(0)? != row as f64 {
            return Err(PosteriorError::Checkpoint(format!(
                "row {row} has index {}",
                &rec[0]
            )));
        }
        if k == 2 {
            let (a, b) = (field(1)?, field(2)?);
            counts.extend([b, a]);
        } else {
            for j in 1..=k {
                counts.push(field(j)?);
            }
        }
    }
    PosteriorState::from_counts(k, counts, a_init, b_init)
}
