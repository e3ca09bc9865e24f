use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::stats::{empirical_cdf, pooled, RankingReport};
use super::BenchError;
use crate::metrics::{Metric, MetricLog};
use crate::sim::SliceKind;

const MEDIAN_HEADER: [&str; 4] = ["config", "embb_mbps", "mmtc_packets", "urllc_bytes"];

fn metric_slug(m: Metric) -> &'static str {
    match m {
        Metric::Throughput => "throughput",
        Metric::Buffer => "buffer",
        Metric::Packets => "packets",
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Io(path.display().to_string(), e.to_string())
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush()
        .map_err(|e| BenchError::Io(path.display().to_string(), e.to_string()))
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Writes `medians.csv`, `ranking.csv`, a CDF file per slice and metric
/// and, when `options` is non-empty, `design_options.csv`. Returns the paths
/// written.
pub fn emit_report(
    out_dir: &Path,
    ranking: &RankingReport,
    medians: &BTreeMap<String, [f64; 3]>,
    logs: &BTreeMap<String, Vec<MetricLog>>,
    options: &[String],
) -> Result<Vec<PathBuf>, BenchError> {
    if medians.is_empty() || ranking.slices.iter().all(|s| s.entries.is_empty()) {
        return Err(BenchError::EmptyReport);
    }
    fs::create_dir_all(out_dir).map_err(|e| BenchError::Io(out_dir.display().to_string(), e.to_string()))?;
    let mut written = Vec::new();

    let path = out_dir.join("medians.csv");
    write_rows(
        &path,
        &MEDIAN_HEADER,
        medians
            .iter()
            .map(|(k, m)| vec![k.clone(), num(m[0]), num(m[1]), num(m[2])]),
    )?;
    written.push(path);

    let path = out_dir.join("ranking.csv");
    let rows = ranking.slices.iter().flat_map(|s| {
        s.entries.iter().enumerate().map(move |(i, e)| {
            vec![
                s.slice.to_string(),
                s.metric.column().to_string(),
                (i + 1).to_string(),
                e.config.clone(),
                num(e.median),
            ]
        })
    });
    write_rows(&path, &["slice", "metric", "rank", "config", "median"], rows)?;
    written.push(path);

    for slice in SliceKind::ALL {
        for metric in Metric::ALL {
            let path = out_dir.join(format!("cdf_{}_{}.csv", slice, metric_slug(metric)));
            let mut rows = Vec::new();
            for (name, l) in logs {
                let values = pooled(l, slice, metric);
                if values.is_empty() {
                    continue;
                }
                for (v, p) in empirical_cdf(&values)? {
                    rows.push(vec![name.clone(), num(v), num(p)]);
                }
            }
            write_rows(&path, &["config", "value", "probability"], rows)?;
            written.push(path);
        }
    }

    if !options.is_empty() {
        let path = out_dir.join("design_options.csv");
        let mut rows = Vec::new();
        for (i, name) in options.iter().enumerate() {
            let m = medians
                .get(name)
                .ok_or_else(|| BenchError::InvalidConfig(format!("design option `{name}` has no results")))?;
            rows.push(vec![format!("Option {}", i + 1), name.clone(), num(m[0]), num(m[1]), num(m[2])]);
        }
        write_rows(
            &path,
            &["option", "config", "embb_mbps", "mmtc_packets", "urllc_bytes"],
            rows,
        )?;
        written.push(path);
    }
    Ok(written)
}
