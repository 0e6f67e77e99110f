//! The wrapper criterion J: cross-validated KNN accuracy on a feature subset.
//!
//! J(X) is the mean stratified k-fold CV accuracy of a KNN classifier
//! restricted to the features in X, computed on the training split only.
//! Fold membership is a deterministic seeded stratified round-robin, so J
//! is a pure function of (indices, data, config).
//!
//! Distances accumulate per-feature in the order the index list gives them.
//! The step evaluator for forward selection reuses the base subset's
//! partial distances and adds the candidate's term last, which reproduces
//! the direct evaluation bit for bit; removal scans recompute from scratch
//! in the reduced order for the same reason.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifiers::knn::vote;
use crate::corpus::FileType;
use crate::dataset::LabeledData;
use crate::error::{Error, Result};
use crate::hash::sub_seed_indexed;

/// Distance metric for the criterion KNN. Only Euclidean is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    #[default]
    Euclidean,
}

/// Configuration of the selection criterion.
#[derive(Debug, Clone)]
pub struct CriterionConfig {
    /// Neighbor count of the criterion KNN.
    pub knn_k: usize,
    /// Cross-validation fold count.
    pub folds: usize,
    pub seed: u64,
    pub distance: DistanceMetric,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig {
            knn_k: 5,
            folds: 5,
            seed: 0,
            distance: DistanceMetric::Euclidean,
        }
    }
}

/// A subset-scoring function the selection algorithms search over.
///
/// `eval_with_added` / `eval_with_removed` exist so implementations can
/// batch one selection step; their results must equal per-subset `eval`
/// calls exactly, and the defaults guarantee that.
pub trait Criterion: Sync {
    /// Number of available features (the paper's D).
    fn full_dim(&self) -> usize;

    /// J for one ordered index list.
    fn eval(&self, indices: &[usize]) -> Result<f64>;

    /// J(base + [c]) for every candidate c.
    fn eval_with_added(&self, base: &[usize], candidates: &[usize]) -> Result<Vec<f64>> {
        candidates
            .iter()
            .map(|&c| {
                let mut ids = base.to_vec();
                ids.push(c);
                self.eval(&ids)
            })
            .collect()
    }

    /// J(base with the member at each position removed), order preserved.
    fn eval_with_removed(&self, base: &[usize]) -> Result<Vec<f64>> {
        (0..base.len())
            .map(|p| {
                let mut ids = base.to_vec();
                ids.remove(p);
                self.eval(&ids)
            })
            .collect()
    }
}

/// Top-k nearest entries ordered by (distance, index); lower index wins ties.
struct TopK {
    k: usize,
    entries: Vec<(f64, u32)>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            entries: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn push(&mut self, d: f64, idx: u32) {
        if self.entries.len() == self.k {
            let worst = self.entries[self.k - 1];
            if d > worst.0 || (d == worst.0 && idx > worst.1) {
                return;
            }
            self.entries.pop();
        }
        let pos = self
            .entries
            .partition_point(|&(ed, ei)| ed < d || (ed == d && ei < idx));
        self.entries.insert(pos, (d, idx));
    }
}

/// The KNN-CV criterion over one dataset.
pub struct KnnCvCriterion<'a> {
    data: &'a LabeledData,
    cfg: CriterionConfig,
    /// Per fold: (train row ids, test row ids).
    fold_rows: Vec<(Vec<usize>, Vec<usize>)>,
}

impl<'a> KnnCvCriterion<'a> {
    pub fn new(data: &'a LabeledData, cfg: &CriterionConfig) -> Result<Self> {
        if cfg.knn_k < 1 {
            return Err(Error::InvalidConfig("criterion knn_k must be >= 1".into()));
        }
        if cfg.folds < 2 {
            return Err(Error::InvalidConfig("criterion folds must be >= 2".into()));
        }
        for (class, count) in data.counts_per_class() {
            if count < cfg.folds {
                return Err(Error::InsufficientData(format!(
                    "class {class} has {count} samples; need at least {} for {}-fold CV",
                    cfg.folds, cfg.folds
                )));
            }
        }
        if data.is_empty() {
            return Err(Error::InsufficientData("empty training data".into()));
        }

        // Stratified round-robin fold assignment after a per-class seeded
        // shuffle.
        let mut fold_of = vec![0usize; data.n()];
        for class in FileType::ALL {
            let mut rows: Vec<usize> = (0..data.n())
                .filter(|&r| data.labels[r] == class)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed_indexed(
                cfg.seed,
                "cv-fold",
                class.code() as u64,
            ));
            rows.shuffle(&mut rng);
            for (pos, &row) in rows.iter().enumerate() {
                fold_of[row] = pos % cfg.folds;
            }
        }

        let mut fold_rows = Vec::with_capacity(cfg.folds);
        for f in 0..cfg.folds {
            let test: Vec<usize> = (0..data.n()).filter(|&r| fold_of[r] == f).collect();
            let train: Vec<usize> = (0..data.n()).filter(|&r| fold_of[r] != f).collect();
            if train.len() < cfg.knn_k {
                return Err(Error::InsufficientData(format!(
                    "fold {f} leaves {} training samples; need at least knn_k = {}",
                    train.len(),
                    cfg.knn_k
                )));
            }
            fold_rows.push((train, test));
        }

        Ok(KnnCvCriterion {
            data,
            cfg: cfg.clone(),
            fold_rows,
        })
    }

    pub fn config(&self) -> &CriterionConfig {
        &self.cfg
    }

    fn fold_accuracy(&self, fold: usize, indices: &[usize]) -> f64 {
        let (train, test) = &self.fold_rows[fold];
        let mut correct = 0usize;
        for &t in test {
            let row_t = self.data.row(t);
            let mut topk = TopK::new(self.cfg.knn_k);
            for (pos, &j) in train.iter().enumerate() {
                let row_j = self.data.row(j);
                let mut d = 0.0;
                for &i in indices {
                    let delta = row_t[i] - row_j[i];
                    d += delta * delta;
                }
                topk.push(d, pos as u32);
            }
            let neighbors: Vec<(f64, FileType)> = topk
                .entries
                .iter()
                .map(|&(d, pos)| (d, self.data.labels[train[pos as usize]]))
                .collect();
            let (pred, _) = vote(&neighbors);
            if pred == self.data.labels[t] {
                correct += 1;
            }
        }
        correct as f64 / test.len() as f64
    }

    /// Base pairwise distances of one fold, test-major.
    fn fold_base(&self, fold: usize, base: &[usize]) -> Vec<f64> {
        let (train, test) = &self.fold_rows[fold];
        let mut d_base = vec![0.0f64; test.len() * train.len()];
        for (ti, &t) in test.iter().enumerate() {
            let row_t = self.data.row(t);
            let out = &mut d_base[ti * train.len()..(ti + 1) * train.len()];
            for (ji, &j) in train.iter().enumerate() {
                let row_j = self.data.row(j);
                let mut d = 0.0;
                for &i in base {
                    let delta = row_t[i] - row_j[i];
                    d += delta * delta;
                }
                out[ji] = d;
            }
        }
        d_base
    }

    fn fold_accuracy_with_added(
        &self,
        fold: usize,
        d_base: &[f64],
        train_labels: &[FileType],
        candidate: usize,
    ) -> f64 {
        let (train, test) = &self.fold_rows[fold];
        let col_train: Vec<f64> = train.iter().map(|&j| self.data.row(j)[candidate]).collect();
        let mut correct = 0usize;
        for (ti, &t) in test.iter().enumerate() {
            let xc = self.data.row(t)[candidate];
            let base_row = &d_base[ti * train.len()..(ti + 1) * train.len()];
            let mut topk = TopK::new(self.cfg.knn_k);
            for ji in 0..train.len() {
                let delta = xc - col_train[ji];
                topk.push(base_row[ji] + delta * delta, ji as u32);
            }
            let neighbors: Vec<(f64, FileType)> = topk
                .entries
                .iter()
                .map(|&(d, pos)| (d, train_labels[pos as usize]))
                .collect();
            let (pred, _) = vote(&neighbors);
            if pred == self.data.labels[t] {
                correct += 1;
            }
        }
        correct as f64 / test.len() as f64
    }
}

impl Criterion for KnnCvCriterion<'_> {
    fn full_dim(&self) -> usize {
        self.data.dim
    }

    fn eval(&self, indices: &[usize]) -> Result<f64> {
        if indices.is_empty() {
            return Err(Error::EmptySubset);
        }
        for &i in indices {
            if i >= self.data.dim {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: self.data.dim,
                });
            }
        }
        let mut sum = 0.0;
        for fold in 0..self.cfg.folds {
            sum += self.fold_accuracy(fold, indices);
        }
        Ok(sum / self.cfg.folds as f64)
    }

    fn eval_with_added(&self, base: &[usize], candidates: &[usize]) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        for &i in base.iter().chain(candidates) {
            if i >= self.data.dim {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: self.data.dim,
                });
            }
        }
        let mut fold_acc = vec![0.0f64; candidates.len() * self.cfg.folds];
        for fold in 0..self.cfg.folds {
            let d_base = self.fold_base(fold, base);
            let train_labels: Vec<FileType> = self.fold_rows[fold]
                .0
                .iter()
                .map(|&j| self.data.labels[j])
                .collect();
            let accs: Vec<f64> = candidates
                .par_iter()
                .map(|&c| self.fold_accuracy_with_added(fold, &d_base, &train_labels, c))
                .collect();
            for (ci, a) in accs.into_iter().enumerate() {
                fold_acc[ci * self.cfg.folds + fold] = a;
            }
        }
        Ok(fold_acc
            .chunks(self.cfg.folds)
            .map(|folds| folds.iter().sum::<f64>() / self.cfg.folds as f64)
            .collect())
    }

    fn eval_with_removed(&self, base: &[usize]) -> Result<Vec<f64>> {
        // No incremental shortcut: subtracting the removed feature's term
        // reorders the float accumulation and need not match a fresh
        // evaluation, so each reduced subset is scored directly.
        (0..base.len())
            .into_par_iter()
            .map(|p| {
                let mut ids = base.to_vec();
                ids.remove(p);
                self.eval(&ids)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Two classes split by feature 7 at 0.5; all other features are noise.
    pub(crate) fn f7_separable(n_per_class: usize, dim: usize, seed: u64) -> LabeledData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = LabeledData::new(dim);
        for s in 0..2 * n_per_class {
            let class = if s % 2 == 0 { FileType::Doc } else { FileType::Txt };
            let mut row: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            row[7] = if class == FileType::Doc {
                0.1 + 0.3 * rng.gen::<f64>()
            } else {
                0.6 + 0.3 * rng.gen::<f64>()
            };
            data.push_row(&row, class, s as u64);
        }
        data
    }

    #[test]
    fn perfectly_separable_feature_scores_one() {
        let data = f7_separable(30, 12, 1);
        let crit = KnnCvCriterion::new(&data, &CriterionConfig::default()).unwrap();
        assert_eq!(crit.eval(&[7]).unwrap(), 1.0);
    }

    #[test]
    fn noise_labels_score_near_half() {
        // Labels independent of features: J should hover around 0.5.
        let mut sum = 0.0;
        let runs = 20;
        for seed in 0..runs {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let mut data = LabeledData::new(16);
            for s in 0..200 {
                let row: Vec<f64> = (0..16).map(|_| rng.gen::<f64>()).collect();
                let class = if s % 2 == 0 { FileType::Doc } else { FileType::Txt };
                data.push_row(&row, class, s as u64);
            }
            let crit = KnnCvCriterion::new(
                &data,
                &CriterionConfig {
                    seed: seed + 55,
                    ..CriterionConfig::default()
                },
            )
            .unwrap();
            let indices: Vec<usize> = (0..16).collect();
            sum += crit.eval(&indices).unwrap();
        }
        let mean = sum / runs as f64;
        assert!(
            (mean - 0.5).abs() < 0.1,
            "noise criterion should be ~0.5, got {mean}"
        );
    }

    #[test]
    fn single_class_scores_one() {
        let mut data = LabeledData::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in 0..20 {
            let row: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
            data.push_row(&row, FileType::Pdf, s as u64);
        }
        let crit = KnnCvCriterion::new(&data, &CriterionConfig::default()).unwrap();
        assert_eq!(crit.eval(&[0, 1, 2, 3]).unwrap(), 1.0);
    }

    #[test]
    fn empty_subset_rejected() {
        let data = f7_separable(10, 8, 2);
        let crit = KnnCvCriterion::new(&data, &CriterionConfig::default()).unwrap();
        assert!(matches!(crit.eval(&[]), Err(Error::EmptySubset)));
    }

    #[test]
    fn too_few_samples_per_class_rejected() {
        let mut data = LabeledData::new(4);
        for s in 0..3 {
            data.push_row(&[0.0, 0.0, 0.0, 0.0], FileType::Doc, s);
        }
        for s in 0..10 {
            data.push_row(&[1.0, 1.0, 1.0, 1.0], FileType::Txt, 10 + s);
        }
        assert!(matches!(
            KnnCvCriterion::new(&data, &CriterionConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn incremental_add_matches_direct_eval_exactly() {
        let data = f7_separable(25, 12, 3);
        let crit = KnnCvCriterion::new(
            &data,
            &CriterionConfig {
                seed: 17,
                ..CriterionConfig::default()
            },
        )
        .unwrap();
        let base = vec![3usize, 7, 1];
        let candidates: Vec<usize> = (0..12).filter(|i| !base.contains(i)).collect();
        let batch = crit.eval_with_added(&base, &candidates).unwrap();
        for (ci, &c) in candidates.iter().enumerate() {
            let mut ids = base.clone();
            ids.push(c);
            let direct = crit.eval(&ids).unwrap();
            assert_eq!(batch[ci], direct, "candidate {c} diverged");
        }
    }

    #[test]
    fn removal_batch_matches_direct_eval_exactly() {
        let data = f7_separable(25, 12, 4);
        let crit = KnnCvCriterion::new(&data, &CriterionConfig::default()).unwrap();
        let base = vec![5usize, 7, 2, 9];
        let batch = crit.eval_with_removed(&base).unwrap();
        for p in 0..base.len() {
            let mut ids = base.clone();
            ids.remove(p);
            assert_eq!(batch[p], crit.eval(&ids).unwrap());
        }
    }

    #[test]
    fn fold_assignment_is_deterministic_and_stratified() {
        let data = f7_separable(25, 8, 5);
        let cfg = CriterionConfig::default();
        let c1 = KnnCvCriterion::new(&data, &cfg).unwrap();
        let c2 = KnnCvCriterion::new(&data, &cfg).unwrap();
        assert_eq!(c1.fold_rows, c2.fold_rows);
        for (_, test) in &c1.fold_rows {
            let docs = test
                .iter()
                .filter(|&&r| data.labels[r] == FileType::Doc)
                .count();
            // 25 per class over 5 folds -> exactly 5 per class per fold.
            assert_eq!(docs, 5);
            assert_eq!(test.len(), 10);
        }
    }
}
