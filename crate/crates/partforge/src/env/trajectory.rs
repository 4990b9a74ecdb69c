//! JSON-lines trajectory log: one record per environment step.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::geom::Pose6D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub episode: usize,
    pub t: usize,
    /// `[u, v, k, l, w]` in the object-centric setting or
    /// `[u, v, k, l, g_a, g_b]` in the full setting.
    pub action: Vec<usize>,
    pub reward: f64,
    pub done: bool,
    pub failure: String,
    /// One `[tx, ty, tz, rx, ry, rz]` row per part, after the step.
    pub poses: Vec<[f64; 6]>,
}

pub fn pose_row(p: &Pose6D) -> [f64; 6] {
    [p.tx, p.ty, p.tz, p.rx, p.ry, p.rz]
}

pub fn write_trajectory<W: Write>(mut w: W, records: &[TrajectoryRecord]) -> std::io::Result<()> {
    for r in records {
        let line = serde_json::to_string(r).expect("trajectory record serializes");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_trajectory<R: BufRead>(r: R) -> std::io::Result<Vec<TrajectoryRecord>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajectoryRecord = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        out.push(rec);
    }
    Ok(out)
}
