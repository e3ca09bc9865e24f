use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use super::BenchError;
use crate::metrics::{Metric, MetricLog};
use crate::sim::SliceKind;

/// Middle value, or the mean of the two middle values for an even count.
pub fn median(samples: &[f64]) -> Result<f64, BenchError> {
    if samples.is_empty() {
        return Err(BenchError::EmptySamples);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Distinct values with the fraction of samples at or below each.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>, BenchError> {
    if samples.is_empty() {
        return Err(BenchError::EmptySamples);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = p,
            _ => out.push((*x, p)),
        }
    }
    Ok(out)
}

/// Samples of one slice metric pooled over several logs.
pub fn pooled(logs: &[MetricLog], slice: SliceKind, metric: Metric) -> Vec<f64> {
    logs.iter().flat_map(|l| l.values(slice, metric)).collect()
}

/// Objective medians (eMBB Mbps, mMTC packets, URLLC bytes) of pooled logs.
pub fn objective_medians(logs: &[MetricLog]) -> Result<[f64; 3], BenchError> {
    let mut out = [0.0; 3];
    for slice in SliceKind::ALL {
        out[slice.index()] = median(&pooled(logs, slice, Metric::objective(slice)))?;
    }
    Ok(out)
}

/// Whether larger values of the slice's objective are better.
pub fn higher_is_better(slice: SliceKind) -> bool {
    slice != SliceKind::Urllc
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankEntry {
    pub config: String,
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceRanking {
    pub slice: SliceKind,
    pub metric: Metric,
    /// Best first.
    pub entries: Vec<RankEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankingReport {
    pub slices: Vec<SliceRanking>,
}

impl RankingReport {
    pub fn best(&self, slice: SliceKind) -> Option<&RankEntry> {
        self.slices
            .iter()
            .find(|r| r.slice == slice)
            .and_then(|r| r.entries.first())
    }
}

/// Orders configurations by a slice's median objective, ties broken by name.
pub fn rank_slice(medians: &BTreeMap<String, [f64; 3]>, slice: SliceKind) -> SliceRanking {
    let mut entries: Vec<RankEntry> = medians
        .iter()
        .map(|(name, m)| RankEntry {
            config: name.clone(),
            median: m[slice.index()],
        })
        .collect();
    let hi = higher_is_better(slice);
    entries.sort_by(|a, b| {
        let by_value = if hi {
            b.median.total_cmp(&a.median)
        } else {
            a.median.total_cmp(&b.median)
        };
        match by_value {
            Ordering::Equal => a.config.cmp(&b.config),
            o => o,
        }
    });
    SliceRanking {
        slice,
        metric: Metric::objective(slice),
        entries,
    }
}

/// Per-slice rankings of the configurations behind `logs`, pooling seeds.
pub fn rank_policies(logs: &BTreeMap<String, Vec<MetricLog>>) -> Result<(RankingReport, BTreeMap<String, [f64; 3]>), BenchError> {
    if logs.len() < 2 {
        return Err(BenchError::InvalidConfig(format!(
            "ranking needs at least two configurations, got {}",
            logs.len()
        )));
    }
    let medians = logs
        .iter()
        .map(|(k, v)| Ok((k.clone(), objective_medians(v)?)))
        .collect::<Result<BTreeMap<_, _>, BenchError>>()?;
    let slices = SliceKind::ALL.iter().map(|&s| rank_slice(&medians, s)).collect();
    Ok((RankingReport { slices }, medians))
}
