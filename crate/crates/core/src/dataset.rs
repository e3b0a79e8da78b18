//! Feature matrices with optional clean and noisy labels.
//!
//! CSV layout: header `f0,...,f{d-1},label[,noisy_label]`. Labels are
//! 0-based class indices; an empty `label` cell means the clean label is
//! unknown. Floats are written with 17 significant digits so a write/read
//! cycle is exact.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    clean_labels: Option<Vec<usize>>,
    noisy_labels: Option<Vec<usize>>,
    num_classes: usize,
}

impl Dataset {
    /// `features` is row-major `n × dim`.
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        clean_labels: Option<Vec<usize>>,
        noisy_labels: Option<Vec<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadShape("feature dimension must be at least 1".into()));
        }
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !features.len().is_multiple_of(dim) {
            return Err(Error::BadShape(format!(
                "{} feature values do not divide into rows of {dim}",
                features.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::BadShape(format!("need at least 2 classes, got {num_classes}")));
        }
        let n = features.len() / dim;
        for labels in [&clean_labels, &noisy_labels].into_iter().flatten() {
            if labels.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
            }
            if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
                return Err(Error::BadShape(format!(
                    "label {bad} out of range for {num_classes} classes"
                )));
            }
        }
        Ok(Dataset { features, dim, clean_labels, noisy_labels, num_classes })
    }

    pub fn len(&self) -> usize {
        self.features.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks(self.dim)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn clean_labels(&self) -> Option<&[usize]> {
        self.clean_labels.as_deref()
    }

    pub fn noisy_labels(&self) -> Option<&[usize]> {
        self.noisy_labels.as_deref()
    }

    pub fn require_clean(&self) -> Result<&[usize]> {
        self.clean_labels().ok_or(Error::MissingCleanLabels)
    }

    pub fn require_noisy(&self) -> Result<&[usize]> {
        self.noisy_labels().ok_or(Error::MissingNoisyLabels)
    }

    /// Replaces the noisy labels, keeping features and clean labels.
    pub fn with_noisy_labels(&self, noisy: Vec<usize>) -> Result<Self> {
        Dataset::new(
            self.features.clone(),
            self.dim,
            self.clean_labels.clone(),
            Some(noisy),
            self.num_classes,
        )
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        let pick = |labels: &Option<Vec<usize>>| {
            labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect())
        };
        Dataset::new(
            features,
            self.dim,
            pick(&self.clean_labels),
            pick(&self.noisy_labels),
            self.num_classes,
        )
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim).map(|k| format!("f{k}")).collect();
        header.push("label".into());
        if self.noisy_labels.is_some() {
            header.push("noisy_label".into());
        }
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            record.clear();
            record.extend(self.row(i).iter().map(|v| format_f64(*v)));
            record.push(
                self.clean_labels
                    .as_ref()
                    .map(|l| l[i].to_string())
                    .unwrap_or_default(),
            );
            if let Some(noisy) = &self.noisy_labels {
                record.push(noisy[i].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout above. With `num_classes = None` the class count
    /// is inferred as `max label + 1` (at least 2).
    pub fn read_csv<R: Read>(reader: R, num_classes: Option<usize>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let label_col = header
            .iter()
            .position(|h| h == "label")
            .ok_or_else(|| Error::BadShape("CSV header lacks a `label` column".into()))?;
        for (k, name) in header.iter().take(label_col).enumerate() {
            if name != format!("f{k}") {
                return Err(Error::BadShape(format!("unexpected column `{name}` at {k}")));
            }
        }
        let noisy_col = header.iter().position(|h| h == "noisy_label");
        let dim = label_col;
        let mut features = Vec::new();
        let mut clean = Vec::new();
        let mut clean_missing = false;
        let mut noisy = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            for k in 0..dim {
                features.push(parse_field::<f64>(&rec[k], k)?);
            }
            match rec.get(label_col).unwrap_or("") {
                "" => clean_missing = true,
                s => clean.push(parse_field::<usize>(s, label_col)?),
            }
            if let Some(col) = noisy_col {
                noisy.push(parse_field::<usize>(rec.get(col).unwrap_or(""), col)?);
            }
        }
        if clean_missing && !clean.is_empty() {
            return Err(Error::BadShape("clean labels are only partially present".into()));
        }
        let clean = (!clean_missing).then_some(clean);
        let noisy = noisy_col.map(|_| noisy);
        let inferred = clean
            .iter()
            .chain(noisy.iter())
            .flat_map(|l| l.iter().copied())
            .max()
            .map_or(2, |m| (m + 1).max(2));
        Dataset::new(features, dim, clean, noisy, num_classes.unwrap_or(inferred))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load_csv(path: impl AsRef<Path>, num_classes: Option<usize>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), num_classes)
    }
}

/// 17 significant digits.
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_field<T: std::str::FromStr>(s: &str, col: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::BadShape(format!("cannot parse `{s}` in column {col}")))
}
