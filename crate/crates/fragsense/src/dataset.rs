//! Labeled feature matrices shared by selection, classifiers, and evaluation.

use std::collections::BTreeMap;

use crate::corpus::FileType;
use crate::error::{Error, Result};
use crate::features::{bfd_counts, normalize_bfd_with, NormalizeMode};
use crate::fragment::FragmentSet;

/// A row-major feature matrix with one label (and source-file group) per row.
#[derive(Debug, Clone)]
pub struct LabeledData {
    pub dim: usize,
    /// Row-major values, `n * dim` long.
    pub x: Vec<f64>,
    pub labels: Vec<FileType>,
    /// Source-file digest per row; drives file-level splits.
    pub groups: Vec<u64>,
}

impl LabeledData {
    pub fn new(dim: usize) -> Self {
        LabeledData {
            dim,
            x: Vec::new(),
            labels: Vec::new(),
            groups: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push_row(&mut self, values: &[f64], label: FileType, group: u64) {
        assert_eq!(values.len(), self.dim);
        self.x.extend_from_slice(values);
        self.labels.push(label);
        self.groups.push(group);
    }

    pub fn counts_per_class(&self) -> BTreeMap<FileType, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    /// Featurize a fragment set: one normalized 256-dim BFD row per fragment.
    pub fn from_fragment_set(set: &FragmentSet, mode: NormalizeMode) -> Result<Self> {
        let mut data = LabeledData::new(256);
        for f in &set.fragments {
            let hist = bfd_counts(&f.bytes);
            let vec = normalize_bfd_with(&hist, f.bytes.len(), mode)?;
            data.push_row(&vec.values, f.label, f.source_digest);
        }
        Ok(data)
    }

    /// New matrix containing the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> LabeledData {
        let mut out = LabeledData::new(self.dim);
        for &r in rows {
            out.push_row(self.row(r), self.labels[r], self.groups[r]);
        }
        out
    }

    /// New matrix keeping only the given feature columns, in the given order.
    pub fn project_columns(&self, indices: &[usize]) -> Result<LabeledData> {
        for &i in indices {
            if i >= self.dim {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: self.dim,
                });
            }
        }
        let mut out = LabeledData::new(indices.len());
        out.labels = self.labels.clone();
        out.groups = self.groups.clone();
        out.x = Vec::with_capacity(self.n() * indices.len());
        for r in 0..self.n() {
            let row = self.row(r);
            for &i in indices {
                out.x.push(row[i]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledData {
        let mut d = LabeledData::new(3);
        d.push_row(&[1.0, 2.0, 3.0], FileType::Doc, 10);
        d.push_row(&[4.0, 5.0, 6.0], FileType::Txt, 11);
        d.push_row(&[7.0, 8.0, 9.0], FileType::Txt, 12);
        d
    }

    #[test]
    fn select_rows_reorders() {
        let d = toy();
        let s = d.select_rows(&[2, 0]);
        assert_eq!(s.n(), 2);
        assert_eq!(s.row(0), &[7.0, 8.0, 9.0]);
        assert_eq!(s.labels, vec![FileType::Txt, FileType::Doc]);
        assert_eq!(s.groups, vec![12, 10]);
    }

    #[test]
    fn project_columns_reorders() {
        let d = toy();
        let p = d.project_columns(&[2, 0]).unwrap();
        assert_eq!(p.dim, 2);
        assert_eq!(p.row(1), &[6.0, 4.0]);
        assert!(d.project_columns(&[3]).is_err());
    }
}
