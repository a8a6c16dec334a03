use std::path::Path;

use rand::seq::SliceRandom;

use super::SlaTier;
use crate::atomic;
use crate::error::{Error, Result};
use crate::rng;

/// Feature columns produced by the sweep harness, in order.
///
/// `model_variant` and `quant_mode` are small ordinal codes.
pub const FEATURE_NAMES: [&str; 11] = [
    "cpu_util_pct",
    "active_cores",
    "mem_gb",
    "gpu_util_pct",
    "model_variant",
    "quant_mode",
    "bandwidth_mbps",
    "rtt_ms",
    "payload_bits",
    "edge_ms",
    "cloud_ms",
];

const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub features: Vec<f64>,
    pub label: SlaTier,
}

impl FeatureRecord {
    pub fn new(features: Vec<f64>, label: SlaTier) -> Self {
        Self { features, label }
    }
}

/// Labeled records sharing one feature order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub records: Vec<FeatureRecord>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, records: Vec<FeatureRecord>) -> Result<Self> {
        if let Some((i, r)) = records
            .iter()
            .enumerate()
            .find(|(_, r)| r.features.len() != feature_names.len())
        {
            return Err(Error::Format {
                what: "dataset",
                reason: format!(
                    "record {i} has {} features, header names {}",
                    r.features.len(),
                    feature_names.len()
                ),
            });
        }
        Ok(Self { feature_names, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub(crate) fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// Seeded shuffle, then the first `round(n * train_fraction)` records go to
/// training and the rest to testing.
pub fn split_dataset(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::config(
            "train_fraction",
            format!("must lie strictly between 0 and 1, got {train_fraction}"),
        ));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng::stream(seed, "dataset.split", 0));
    let n_train = (data.len() as f64 * train_fraction).round() as usize;
    let (train, test) = order.split_at(n_train);
    Ok((data.subset(train), data.subset(test)))
}

/// A feature CSV whose `label` column may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<SlaTier>>,
}

impl Table {
    pub fn into_dataset(self) -> Result<Dataset> {
        let labels = self.labels.ok_or_else(|| Error::Format {
            what: "dataset",
            reason: format!("missing `{LABEL_COLUMN}` column"),
        })?;
        let records = self
            .rows
            .into_iter()
            .zip(labels)
            .map(|(features, label)| FeatureRecord { features, label })
            .collect();
        Dataset::new(self.feature_names, records)
    }
}

pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let label_col = headers.iter().position(|h| h == LABEL_COLUMN);
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_col)
        .map(|(_, h)| h.to_string())
        .collect();

    let bad = |line: usize, reason: String| Error::Format {
        what: "dataset",
        reason: format!("{} line {line}: {reason}", path.display()),
    };
    let mut rows = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        let mut features = Vec::with_capacity(feature_names.len());
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            if Some(col) == label_col {
                let tier = field
                    .parse::<u8>()
                    .ok()
                    .and_then(SlaTier::from_number)
                    .ok_or_else(|| bad(line, format!("label `{field}` is not 1, 2 or 3")))?;
                labels.as_mut().unwrap().push(tier);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| bad(line, format!("`{field}` is not a number")))?;
                features.push(v);
            }
        }
        rows.push(features);
    }
    Ok(Table {
        feature_names,
        rows,
        labels,
    })
}

pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    atomic::write_file(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(data.feature_names.iter().map(String::as_str).chain([LABEL_COLUMN]))?;
        for r in &data.records {
            let mut row: Vec<String> = r.features.iter().map(f64::to_string).collect();
            row.push(r.label.to_string());
            out.write_record(&row)?;
        }
        out.flush()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> Dataset {
        let records = (0..n)
            .map(|i| FeatureRecord::new(vec![i as f64], SlaTier::ALL[i % 3]))
            .collect();
        Dataset::new(vec!["x".into()], records).unwrap()
    }

    #[test]
    fn split_sizes_and_partition() {
        let data = toy(100);
        let (train, test) = split_dataset(&data, 0.8, 3).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
        let mut seen: Vec<f64> = train
            .records
            .iter()
            .chain(&test.records)
            .map(|r| r.features[0])
            .collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..100).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(split_dataset(&data, 0.8, 3).unwrap(), (train, test));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        for f in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(split_dataset(&toy(10), f, 0).is_err());
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = Dataset::new(
            vec!["a".into(), "b".into()],
            vec![
                FeatureRecord::new(vec![1.5, -2.0], SlaTier::Sla3),
                FeatureRecord::new(vec![0.0, 1e9], SlaTier::Sla1),
            ],
        )
        .unwrap();
        write_dataset(&path, &data).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("a,b,label\n1.5,-2,3\n"));
        assert_eq!(read_table(&path).unwrap().into_dataset().unwrap(), data);
    }

    #[test]
    fn unlabeled_and_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        let t = read_table(&path).unwrap();
        assert!(t.labels.is_none());
        assert!(t.into_dataset().is_err());
        std::fs::write(&path, "a,label\n1,4\n").unwrap();
        assert!(read_table(&path).is_err());
        std::fs::write(&path, "a,label\nx,1\n").unwrap();
        assert!(read_table(&path).is_err());
    }
}
