use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Per-cluster counts of `floor(duration / bin_unit)`, zero bins omitted.
/// Nodes without a cluster assignment are skipped.
pub fn duration_histogram(
    durations: &BTreeMap<String, f64>,
    assignments: &BTreeMap<String, usize>,
    bin_unit: f64,
) -> Result<BTreeMap<usize, Vec<(u64, usize)>>> {
    if !(bin_unit > 0.0) || !bin_unit.is_finite() {
        return Err(Error::InvalidArgument(format!("bin_unit {bin_unit} must be > 0")));
    }
    let mut counts: BTreeMap<usize, BTreeMap<u64, usize>> = BTreeMap::new();
    for (node, &value) in durations {
        if !(value >= 0.0) {
            return Err(Error::NegativeDuration {
                node: node.clone(),
                value,
            });
        }
        let Some(&cluster) = assignments.get(node) else {
            continue;
        };
        let bin = (value / bin_unit).floor() as u64;
        *counts.entry(cluster).or_default().entry(bin).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(c, bins)| (c, bins.into_iter().collect()))
        .collect())
}

pub fn write_histogram_csv<W: std::io::Write>(
    hist: &BTreeMap<usize, Vec<(u64, usize)>>,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "bin", "count"])?;
    for (c, bins) in hist {
        for (b, n) in bins {
            w.write_record([c.to_string(), b.to_string(), n.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
