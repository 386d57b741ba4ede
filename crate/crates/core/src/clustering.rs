//! K-means over a frequency matrix with a pluggable similarity measure.
//! Only the metric changes between measures; centroids stay arithmetic
//! means, so termination and the fixed-point property are what is
//! guaranteed, not a monotone objective.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FrequencyMatrix;
use crate::similarity::{FeatureStats, MeasureKind, SimilarityMeasure};
use crate::Real;

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

/// A fitted clustering: centroids, per-sample assignments and everything
/// needed to score new samples (global feature stats, measure, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel<T> {
    pub k: usize,
    pub centroids: Array2<T>,
    pub assignments: Vec<usize>,
    pub stats: FeatureStats<T>,
    pub measure_kind: MeasureKind,
    pub seed: u64,
    pub iterations_run: usize,
    pub converged: bool,
}

impl<T: Real> ClusterModel<T> {
    pub fn n_features(&self) -> usize {
        self.centroids.ncols()
    }

    /// The measure the model was fitted with.
    pub fn measure(&self) -> SimilarityMeasure<T> {
        SimilarityMeasure {
            kind: self.measure_kind,
            stats: Some(self.stats.clone()),
        }
    }

    /// Index of the closest centroid; ties go to the lowest index.
    pub fn assign(&self, sample: ArrayView1<'_, T>) -> Result<usize> {
        let measure = self.measure();
        nearest_centroid(sample, &self.centroids, &measure)
    }
}

fn nearest_centroid<T: Real>(
    sample: ArrayView1<'_, T>,
    centroids: &Array2<T>,
    measure: &SimilarityMeasure<T>,
) -> Result<usize> {
    let mut best = 0usize;
    let mut best_distance = T::infinity();
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = measure.distance(sample, centroid)?;
        if d < best_distance {
            best = c;
            best_distance = d;
        }
    }
    Ok(best)
}

/// Reseeds clusters that lost all members: the sample farthest from its
/// current centroid becomes the empty cluster's new centroid (ties to the
/// lowest sample index). Donor samples are only taken from clusters with
/// at least two members, so every pass terminates with k non-empty
/// clusters. Returns `(cluster, sample)` pairs for each reseed.
pub fn handle_empty_clusters<T: Real>(
    values: ArrayView2<'_, T>,
    centroids: &mut Array2<T>,
    assignments: &mut [usize],
    measure: &SimilarityMeasure<T>,
) -> Result<Vec<(usize, usize)>> {
    let k = centroids.nrows();
    let n = values.nrows();
    let mut reseeded = Vec::new();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let empty = match (0..k).find(|&c| sizes[c] == 0) {
            Some(c) => c,
            None => break,
        };
        let mut donor: Option<(usize, T)> = None;
        for i in 0..n {
            if sizes[assignments[i]] < 2 {
                continue;
            }
            let d = measure.distance(values.row(i), centroids.row(assignments[i]))?;
            let better = match donor {
                None => true,
                Some((_, best)) => d > best,
            };
            if better {
                donor = Some((i, d));
            }
        }
        let (sample, _) = donor.expect("k <= n guarantees a donor cluster with >= 2 members");
        for j in 0..values.ncols() {
            centroids[[empty, j]] = values[[sample, j]];
        }
        assignments[sample] = empty;
        reseeded.push((empty, sample));
    }
    Ok(reseeded)
}

fn update_centroids<T: Real>(
    values: ArrayView2<'_, T>,
    assignments: &[usize],
    k: usize,
) -> Array2<T> {
    let (n, m) = values.dim();
    let mut sums = Array2::<T>::zeros((k, m));
    let mut counts = vec![0usize; k];
    for i in 0..n {
        let c = assignments[i];
        counts[c] += 1;
        for j in 0..m {
            sums[[c, j]] += values[[i, j]];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let size = T::from_usize(counts[c]).unwrap();
            for j in 0..m {
                sums[[c, j]] = sums[[c, j]] / size;
            }
        }
    }
    sums
}

fn max_centroid_shift<T: Real>(old: &Array2<T>, new: &Array2<T>) -> T {
    let mut worst = T::zero();
    for (old_row, new_row) in old.rows().into_iter().zip(new.rows()) {
        let mut ss = T::zero();
        for (&a, &b) in old_row.iter().zip(new_row.iter()) {
            let d = a - b;
            ss += d * d;
        }
        worst = worst.max(ss.sqrt());
    }
    worst
}

/// Fits k-means with a seeded draw of k distinct rows as the initial
/// centroids. Deterministic for fixed inputs and seed.
pub fn kmeans_fit<T: Real>(
    matrix: &FrequencyMatrix<T>,
    k: usize,
    measure_kind: MeasureKind,
    seed: u64,
    max_iter: usize,
    tol: T,
) -> Result<ClusterModel<T>> {
    let n = matrix.n_samples();
    if k == 0 {
        return Err(Error::config("k must be >= 1"));
    }
    if k > n {
        return Err(Error::config(format!("k = {k} exceeds sample count {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    kmeans_fit_with_init(matrix, k, measure_kind, &indices[..k], seed, max_iter, tol)
}

/// Fits k-means from explicit initial rows. `seed` is only recorded in
/// the model; no randomness is used beyond the initial centroids.
pub fn kmeans_fit_with_init<T: Real>(
    matrix: &FrequencyMatrix<T>,
    k: usize,
    measure_kind: MeasureKind,
    init_rows: &[usize],
    seed: u64,
    max_iter: usize,
    tol: T,
) -> Result<ClusterModel<T>> {
    let (n, m) = matrix.values.dim();
    if k == 0 {
        return Err(Error::config("k must be >= 1"));
    }
    if k > n {
        return Err(Error::config(format!("k = {k} exceeds sample count {n}")));
    }
    if max_iter == 0 {
        return Err(Error::config("max_iter must be >= 1"));
    }
    if !(tol >= T::zero()) {
        return Err(Error::config("tol must be >= 0"));
    }
    if init_rows.len() != k {
        return Err(Error::config(format!(
            "expected {k} initial rows, got {}",
            init_rows.len()
        )));
    }
    {
        let mut sorted = init_rows.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k || init_rows.iter().any(|&i| i >= n) {
            return Err(Error::config("initial rows must be distinct and in range"));
        }
    }

    let stats = FeatureStats::from_matrix(matrix);
    let measure = SimilarityMeasure::new(measure_kind, Some(stats.clone()))?;
    let values = matrix.values.view();

    let mut centroids = Array2::<T>::zeros((k, m));
    for (c, &row) in init_rows.iter().enumerate() {
        for j in 0..m {
            centroids[[c, j]] = values[[row, j]];
        }
    }

    let mut assignments: Vec<usize> = vec![0; n];
    let mut iterations_run = 0usize;
    let mut converged = false;
    for iter in 0..max_iter {
        iterations_run = iter + 1;
        let mut next: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            next.push(nearest_centroid(values.row(i), &centroids, &measure)?);
        }
        handle_empty_clusters(values, &mut centroids, &mut next, &measure)?;
        if iter > 0 && next == assignments {
            converged = true;
            break;
        }
        assignments = next;
        let updated = update_centroids(values, &assignments, k);
        let shift = max_centroid_shift(&centroids, &updated);
        centroids = updated;
        if shift <= tol {
            converged = true;
            break;
        }
    }

    Ok(ClusterModel {
        k,
        centroids,
        assignments,
        stats,
        measure_kind,
        seed,
        iterations_run,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{FrequencyMatrix, MatrixMode, SyscallVocabulary};
    use ndarray::{array, Array2};

    fn matrix_of(values: Array2<f64>, labels: Vec<Option<String>>) -> FrequencyMatrix<f64> {
        let m = values.ncols();
        let tokens: Vec<String> = (0..m).map(|j| format!("c{j}")).collect();
        let rows: Vec<String> = (0..values.nrows()).map(|i| format!("r{i}")).collect();
        FrequencyMatrix::new(
            rows,
            SyscallVocabulary::from_tokens(tokens),
            MatrixMode::Count,
            values,
            labels,
        )
        .unwrap()
    }

    fn blob_matrix() -> FrequencyMatrix<f64> {
        // two well-separated blobs on the first axis
        matrix_of(
            array![[1.0, 1.0], [2.0, 1.0], [30.0, 1.0], [31.0, 1.0]],
            vec![None; 4],
        )
    }

    #[test]
    fn saturated_k_gives_one_cluster_per_row() {
        let m = blob_matrix();
        let model = kmeans_fit(&m, 4, MeasureKind::Idsim, 1, 100, 0.0).unwrap();
        let mut sorted = model.assignments.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 4);
        assert!(model.converged);
    }

    #[test]
    fn k1_centroid_is_column_mean() {
        let m = blob_matrix();
        let model = kmeans_fit(&m, 1, MeasureKind::Cosine, 7, 100, 1e-9).unwrap();
        assert_eq!(model.assignments, vec![0, 0, 0, 0]);
        assert!((model.centroids[[0, 0]] - 16.0).abs() < 1e-12);
        assert!((model.centroids[[0, 1]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separates_two_blobs() {
        let m = blob_matrix();
        for kind in [MeasureKind::Idsim, MeasureKind::Cosine] {
            let model = kmeans_fit(&m, 2, kind, 42, 100, 1e-9).unwrap();
            assert_eq!(model.assignments[0], model.assignments[1], "{kind}");
            assert_eq!(model.assignments[2], model.assignments[3], "{kind}");
            assert_ne!(model.assignments[0], model.assignments[2], "{kind}");
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let m = blob_matrix();
        let a = kmeans_fit(&m, 2, MeasureKind::Idsim, 5, 100, 1e-6).unwrap();
        let b = kmeans_fit(&m, 2, MeasureKind::Idsim, 5, 100, 1e-6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parameter_validation() {
        let m = blob_matrix();
        assert!(kmeans_fit(&m, 0, MeasureKind::Cosine, 1, 100, 0.0).is_err());
        assert!(kmeans_fit(&m, 5, MeasureKind::Cosine, 1, 100, 0.0).is_err());
        assert!(kmeans_fit_with_init(&m, 2, MeasureKind::Cosine, &[0, 0], 1, 100, 0.0).is_err());
        assert!(kmeans_fit_with_init(&m, 2, MeasureKind::Cosine, &[0, 1], 1, 0, 0.0).is_err());
    }

    #[test]
    fn assign_prefers_lowest_index_on_ties() {
        let m = blob_matrix();
        let model = ClusterModel {
            k: 2,
            centroids: array![[1.0, 1.0], [1.0, 1.0]],
            assignments: vec![0, 0, 1, 1],
            stats: FeatureStats::from_matrix(&m),
            measure_kind: MeasureKind::Idsim,
            seed: 0,
            iterations_run: 1,
            converged: true,
        };
        let sample = array![5.0, 1.0];
        assert_eq!(model.assign(sample.view()).unwrap(), 0);
    }

    #[test]
    fn assign_recovers_own_centroid() {
        let m = blob_matrix();
        let model = kmeans_fit(&m, 2, MeasureKind::Idsim, 3, 100, 1e-9).unwrap();
        for c in 0..2 {
            assert_eq!(model.assign(model.centroids.row(c)).unwrap(), c);
        }
        // a fresh point near the second blob lands with it
        let probe = array![29.0, 1.0];
        let blob_b = model.assignments[2];
        assert_eq!(model.assign(probe.view()).unwrap(), blob_b);
    }

    #[test]
    fn empty_cluster_reseeded_with_farthest_sample() {
        let values = array![[0.0, 1.0], [1.0, 1.0], [9.0, 1.0]];
        let m = matrix_of(values.clone(), vec![None; 3]);
        let measure = SimilarityMeasure::idsim(FeatureStats::from_matrix(&m));
        // all samples in cluster 0, clusters 1 and 2 empty
        let mut centroids = array![[0.1, 1.0], [50.0, 50.0], [60.0, 60.0]];
        let mut assignments = vec![0usize, 0, 0];
        let reseeded =
            handle_empty_clusters(values.view(), &mut centroids, &mut assignments, &measure)
                .unwrap();
        // farthest from centroid 0 is row 2, then row 1 seeds cluster 2
        assert_eq!(reseeded, vec![(1, 2), (2, 1)]);
        assert_eq!(assignments, vec![0, 2, 1]);
        assert_eq!(centroids.row(1), values.row(2));
        assert_eq!(centroids.row(2), values.row(1));
    }

    #[test]
    fn no_empty_clusters_is_a_noop() {
        let values = array![[0.0, 1.0], [5.0, 1.0]];
        let m = matrix_of(values.clone(), vec![None; 2]);
        let measure = SimilarityMeasure::idsim(FeatureStats::from_matrix(&m));
        let mut centroids = array![[0.0, 1.0], [5.0, 1.0]];
        let mut assignments = vec![0usize, 1];
        let before = assignments.clone();
        let reseeded =
            handle_empty_clusters(values.view(), &mut centroids, &mut assignments, &measure)
                .unwrap();
        assert!(reseeded.is_empty());
        assert_eq!(assignments, before);
    }

    #[test]
    fn empty_cluster_tie_breaks_to_lowest_sample() {
        // rows 0 and 1 are equally far from their centroid
        let values = array![[0.0, 2.0], [4.0, 2.0], [2.0, 2.0]];
        let m = matrix_of(values.clone(), vec![None; 3]);
        let measure = SimilarityMeasure::idsim(FeatureStats::from_matrix(&m));
        let mut centroids = array![[2.0, 2.0], [99.0, 99.0]];
        let mut assignments = vec![0usize, 0, 0];
        let reseeded =
            handle_empty_clusters(values.view(), &mut centroids, &mut assignments, &measure)
                .unwrap();
        assert_eq!(reseeded, vec![(1, 0)]);
    }

    #[test]
    fn converged_fit_is_a_fixed_point() {
        let m = blob_matrix();
        let model = kmeans_fit(&m, 2, MeasureKind::Idsim, 11, 100, 0.0).unwrap();
        assert!(model.converged);
        let measure = model.measure();
        // one more assign round changes nothing
        for i in 0..m.n_samples() {
            let a = nearest_centroid(m.row(i), &model.centroids, &measure).unwrap();
            assert_eq!(a, model.assignments[i]);
        }
        // and the centroids are already the member means
        let updated = update_centroids(m.values.view(), &model.assignments, 2);
        for (a, b) in model.centroids.iter().zip(updated.iter()) {
            assert!((*a - *b).abs() <= 1e-9);
        }
    }

    #[test]
    fn permutation_equivariance_via_matching_init() {
        let m = blob_matrix();
        // swap rows 0 and 3
        let permuted = matrix_of(
            array![[31.0, 1.0], [2.0, 1.0], [30.0, 1.0], [1.0, 1.0]],
            vec![None; 4],
        );
        let base =
            kmeans_fit_with_init(&m, 2, MeasureKind::Idsim, &[0, 2], 0, 100, 1e-9).unwrap();
        // same initial centroid vectors live at permuted positions 3 and 2
        let moved =
            kmeans_fit_with_init(&permuted, 2, MeasureKind::Idsim, &[3, 2], 0, 100, 1e-9).unwrap();
        let perm = [3usize, 1, 2, 0];
        for i in 0..4 {
            assert_eq!(base.assignments[i], moved.assignments[perm[i]]);
        }
    }

    #[test]
    fn iterations_bounded_by_max_iter() {
        let m = blob_matrix();
        let model = kmeans_fit(&m, 2, MeasureKind::Jaccard, 2, 1, 0.0).unwrap();
        assert!(model.iterations_run <= 1);
    }
}
