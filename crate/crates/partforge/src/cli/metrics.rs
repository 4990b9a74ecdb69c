//! Metrics rows and the Table-style CSV they serialize to.

use std::path::Path;

use super::config::CliError;

/// Stable build identifier carried in artifact headers.
pub const BUILD_ID: &str = concat!("partforge-", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    /// "ours_oc", "ours_full", or "baseline_rrt".
    pub method: String,
    /// "easy_train", "hard_train", or "test".
    pub split: String,
    /// Percent in [0, 100].
    pub success_rate: f64,
    /// Mean attempted planner states; None renders blank (RL train splits).
    pub plan_steps: Option<f64>,
}

/// Render rows (sorted by method then split) to CSV with header comments.
pub fn render_metrics(rows: &[MetricsRow], resolved_config: &str) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| (a.method.as_str(), a.split.as_str()).cmp(&(b.method.as_str(), b.split.as_str())));
    let mut out = String::new();
    out.push_str(&format!("# build: {BUILD_ID}\n"));
    for line in resolved_config.lines() {
        out.push_str(&format!("# config: {line}\n"));
    }
    out.push_str("method,split,success_rate,plan_steps\n");
    for r in &rows {
        let steps = r.plan_steps.map(|s| format!("{s:.1}")).unwrap_or_default();
        out.push_str(&format!("{},{},{:.1},{}\n", r.method, r.split, r.success_rate, steps));
    }
    out
}

pub fn write_metrics(dir: &Path, rows: &[MetricsRow], resolved_config: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io)?;
    std::fs::write(dir.join("metrics.csv"), render_metrics(rows, resolved_config))
        .map_err(CliError::io)
}

/// Parse a metrics CSV back into rows, skipping comment lines.
pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRow>, CliError> {
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.is_empty() || line.starts_with("method,") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(CliError::Io(format!("bad metrics line: {line}")));
        }
        let success_rate: f64 = cols[2]
            .parse()
            .map_err(|_| CliError::Io(format!("bad success rate: {line}")))?;
        let plan_steps = if cols[3].is_empty() {
            None
        } else {
            Some(
                cols[3]
                    .parse()
                    .map_err(|_| CliError::Io(format!("bad plan steps: {line}")))?,
            )
        };
        rows.push(MetricsRow {
            method: cols[0].to_string(),
            split: cols[1].to_string(),
            success_rate,
            plan_steps,
        });
    }
    Ok(rows)
}
