//! The `report` subcommand: merges summaries into `report.csv`
//! (`generator,task,kind,metric,value,status`) and `plot.csv` (`series,x,y`).

use std::collections::BTreeMap;
use std::path::Path;

use crate::summary::{Summary, SCHEMA};
use crate::CliError;

pub const REPORT_HEADER: [&str; 6] = ["generator", "task", "kind", "metric", "value", "status"];
pub const PLOT_HEADER: [&str; 3] = ["series", "x", "y"];

type Key = (String, String, String, String);

pub fn read_summary(path: &Path) -> Result<Summary, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    match raw.get("schema").and_then(|v| v.as_u64()) {
        Some(s) if s == SCHEMA as u64 => {}
        other => {
            return Err(CliError::Schema(format!(
                "{}: schema {other:?}, expected {SCHEMA}",
                path.display()
            )))
        }
    }
    serde_json::from_value(raw).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

/// Union of rows over all summaries. A `(generator, task, kind, metric)` key
/// seen twice keeps its first value, so merging a file with itself is a no-op.
pub fn merge(summaries: &[Summary]) -> (BTreeMap<Key, (f64, String)>, BTreeMap<String, Vec<(f64, f64)>>) {
    let mut rows = BTreeMap::new();
    let mut plots = BTreeMap::new();
    for s in summaries {
        for t in &s.tasks {
            for (metric, v) in &t.ratios {
                rows.entry((s.generator.clone(), t.task.clone(), t.kind.clone(), metric.clone()))
                    .or_insert((*v, t.status.as_str().to_string()));
            }
            for ser in &t.series {
                let name = format!("{}/{}/{}/{}", s.generator, t.task, t.kind, ser.name);
                plots
                    .entry(name)
                    .or_insert_with(|| ser.x.iter().copied().zip(ser.y.iter().copied()).collect());
            }
        }
    }
    (rows, plots)
}

pub fn report(files: &[impl AsRef<Path>], out: &Path) -> Result<usize, CliError> {
    let summaries = files.iter().map(|f| read_summary(f.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let (rows, plots) = merge(&summaries);
    std::fs::create_dir_all(out)?;
    let mut wr = csv::Writer::from_path(out.join("report.csv"))?;
    wr.write_record(REPORT_HEADER)?;
    for ((g, t, k, m), (v, status)) in &rows {
        wr.write_record([g, t, k, m, &v.to_string(), status])?;
    }
    wr.flush()?;
    let mut wr = csv::Writer::from_path(out.join("plot.csv"))?;
    wr.write_record(PLOT_HEADER)?;
    for (name, pts) in &plots {
        for (x, y) in pts {
            wr.write_record([name.as_str(), &x.to_string(), &y.to_string()])?;
        }
    }
    wr.flush()?;
    Ok(rows.len())
}
