//! Byte frequency distribution features.
//!
//! A fragment's feature vector is its 256-bin byte histogram normalized to
//! [0, 1]. Length normalization (divide by fragment size) is the default:
//! the vector becomes a probability distribution, comparable across the two
//! fragment sizes. Max normalization (divide by the largest count) is kept
//! as an alternative reading of the same extraction step.

use std::io::Write;

use crate::error::{Error, Result};

/// Raw byte-value histogram of one fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    pub counts: [u32; 256],
}

impl Histogram256 {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Count occurrences of each byte value.
pub fn bfd_counts(bytes: &[u8]) -> Histogram256 {
    let mut counts = [0u32; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    Histogram256 { counts }
}

/// How histogram counts map to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeMode {
    /// Divide by fragment length; values sum to 1.
    Length,
    /// Divide by the largest bin count; the modal byte maps to 1.
    Max,
}

impl NormalizeMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "length" => Ok(NormalizeMode::Length),
            "max" => Ok(NormalizeMode::Max),
            other => Err(Error::InvalidConfig(format!(
                "unknown normalize mode `{other}` (expected `length` or `max`)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormalizeMode::Length => "length",
            NormalizeMode::Max => "max",
        }
    }
}

/// A normalized feature vector, 256-dimensional when full or carrying the
/// original indices when projected to a subset.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Original feature indices when this vector is a projection.
    pub subset_ids: Option<Vec<usize>>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Normalize a histogram by fragment length.
pub fn normalize_bfd(hist: &Histogram256, fragment_size: usize) -> Result<FeatureVector> {
    normalize_bfd_with(hist, fragment_size, NormalizeMode::Length)
}

pub fn normalize_bfd_with(
    hist: &Histogram256,
    fragment_size: usize,
    mode: NormalizeMode,
) -> Result<FeatureVector> {
    if fragment_size == 0 {
        return Err(Error::ZeroLength);
    }
    debug_assert_eq!(hist.total(), fragment_size as u64);
    let denom = match mode {
        NormalizeMode::Length => fragment_size as f64,
        NormalizeMode::Max => f64::from(
            *hist
                .counts
                .iter()
                .max()
                .expect("histogram has 256 bins"),
        ),
    };
    let values = hist.counts.iter().map(|&c| f64::from(c) / denom).collect();
    Ok(FeatureVector {
        values,
        subset_ids: None,
    })
}

/// Extract the values at `indices`, in that order, from a full vector.
pub fn project(vec: &FeatureVector, indices: &[usize]) -> Result<FeatureVector> {
    let dim = vec.dim();
    let mut values = Vec::with_capacity(indices.len());
    for &i in indices {
        let v = vec
            .values
            .get(i)
            .ok_or(Error::IndexOutOfRange { index: i, dim })?;
        values.push(*v);
    }
    Ok(FeatureVector {
        values,
        subset_ids: Some(indices.to_vec()),
    })
}

/// Write a labeled feature matrix as CSV.
///
/// Header is `label,f0,...,f255` for full vectors or `label,f<i>,...` with
/// the original indices for projected ones; values carry 9 significant
/// digits.
pub fn write_feature_csv<W: Write>(
    mut out: W,
    rows: &[(&str, &FeatureVector)],
) -> Result<()> {
    let indices: Vec<usize> = match rows.first() {
        Some((_, v)) => match &v.subset_ids {
            Some(ids) => ids.clone(),
            None => (0..v.dim()).collect(),
        },
        None => (0..256).collect(),
    };
    let mut header = String::from("label");
    for i in &indices {
        header.push_str(&format!(",f{i}"));
    }
    header.push('\n');
    out.write_all(header.as_bytes())?;
    for (label, vec) in rows {
        let mut line = String::from(*label);
        for v in &vec.values {
            line.push_str(&format!(",{v:.8e}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_constant_input() {
        let hist = bfd_counts(&vec![0u8; 500]);
        assert_eq!(hist.counts[0], 500);
        assert_eq!(hist.counts[1..].iter().sum::<u32>(), 0);
    }

    #[test]
    fn counts_uniform_input() {
        let bytes: Vec<u8> = (0..=255u8).chain(0..=255u8).collect();
        let hist = bfd_counts(&bytes);
        assert!(hist.counts.iter().all(|&c| c == 2));
        assert_eq!(hist.total(), 512);
    }

    #[test]
    fn normalize_delta_and_two_point() {
        let hist = bfd_counts(&vec![0u8; 500]);
        let v = normalize_bfd(&hist, 500).unwrap();
        assert_eq!(v.values[0], 1.0);
        assert!(v.values[1..].iter().all(|&x| x == 0.0));

        let mut bytes = vec![65u8; 250];
        bytes.extend(vec![66u8; 250]);
        let v = normalize_bfd(&bfd_counts(&bytes), 500).unwrap();
        assert_eq!(v.values[65], 0.5);
        assert_eq!(v.values[66], 0.5);
    }

    #[test]
    fn normalize_uniform() {
        let bytes: Vec<u8> = (0..=255u8).chain(0..=255u8).collect();
        let v = normalize_bfd(&bfd_counts(&bytes), 512).unwrap();
        for x in &v.values {
            assert!((x - 2.0 / 512.0).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_zero_length_errors() {
        let hist = bfd_counts(&[]);
        assert!(matches!(normalize_bfd(&hist, 0), Err(Error::ZeroLength)));
    }

    #[test]
    fn max_mode_puts_mode_at_one() {
        let mut bytes = vec![7u8; 300];
        bytes.extend(vec![9u8; 200]);
        let v = normalize_bfd_with(&bfd_counts(&bytes), 500, NormalizeMode::Max).unwrap();
        assert_eq!(v.values[7], 1.0);
        assert!((v.values[9] - 200.0 / 300.0).abs() < 1e-15);
    }

    #[test]
    fn project_cases() {
        let full = FeatureVector {
            values: (0..256).map(|i| i as f64 / 256.0).collect(),
            subset_ids: None,
        };
        let identity: Vec<usize> = (0..256).collect();
        assert_eq!(project(&full, &identity).unwrap().values, full.values);

        let delta = FeatureVector {
            values: {
                let mut v = vec![0.0; 256];
                v[0] = 1.0;
                v
            },
            subset_ids: None,
        };
        assert_eq!(project(&delta, &[10, 20]).unwrap().values, vec![0.0, 0.0]);
        assert!(project(&full, &[]).unwrap().values.is_empty());
        assert!(matches!(
            project(&full, &[300]),
            Err(Error::IndexOutOfRange { index: 300, dim: 256 })
        ));
    }

    #[test]
    fn project_composes() {
        let full = FeatureVector {
            values: (0..256).map(|i| (i as f64).sin().abs()).collect(),
            subset_ids: None,
        };
        let outer = [3usize, 50, 7, 199];
        let inner = [2usize, 0];
        let once = project(&full, &[outer[2], outer[0]]).unwrap();
        let twice = project(&project(&full, &outer).unwrap(), &inner)
            .unwrap()
            .values;
        assert_eq!(once.values, twice);
    }

    #[test]
    fn csv_format() {
        let v = normalize_bfd(&bfd_counts(&vec![0u8; 500]), 500).unwrap();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &[("TXT", &v)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("label,f0,f1,"));
        assert!(header.ends_with(",f255"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("TXT,1.00000000e0,0.00000000e0"));

        let projected = project(&v, &[3, 250]).unwrap();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &[("PDF", &projected)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,f3,f250\n"));
    }

    proptest! {
        #[test]
        fn full_vector_is_probability_distribution(bytes in proptest::collection::vec(any::<u8>(), 1..1500)) {
            let v = normalize_bfd(&bfd_counts(&bytes), bytes.len()).unwrap();
            let sum: f64 = v.values.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(v.values.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }

        #[test]
        fn permutation_invariance(bytes in proptest::collection::vec(any::<u8>(), 1..1000), seed in any::<u64>()) {
            let mut shuffled = bytes.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = normalize_bfd(&bfd_counts(&bytes), bytes.len()).unwrap();
            let b = normalize_bfd(&bfd_counts(&shuffled), bytes.len()).unwrap();
            prop_assert_eq!(a.values, b.values);
        }
    }
}
