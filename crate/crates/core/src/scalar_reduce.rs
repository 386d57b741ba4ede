//! Compresses every sample to one scalar: the sum of its distances to all
//! cluster centers plus the distance to its nearest neighbor within its
//! cluster. Training samples look for neighbors among their cluster
//! peers; test samples are assigned first and look among the training
//! members of that cluster. Singleton clusters contribute 0 as the
//! neighbor term.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::clustering::ClusterModel;
use crate::ingest::FrequencyMatrix;
use crate::Real;

/// Whether a scalar set came from the training or the testing side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetSource {
    Train,
    Test,
}

/// Per-sample singleton features: one scalar per input sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFeatureSet<T> {
    pub ids: Vec<String>,
    pub values: Vec<T>,
    pub labels: Vec<Option<String>>,
    pub cluster_of: Vec<usize>,
    pub source: SetSource,
}

impl<T: Real> ScalarFeatureSet<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes `sample_id,cluster,scalar,label` rows; absent labels become
    /// empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()>
    where
        T: Serialize,
    {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["sample_id", "cluster", "scalar", "label"])?;
        for i in 0..self.len() {
            out.serialize((
                &self.ids[i],
                self.cluster_of[i],
                self.values[i],
                self.labels[i].as_deref().unwrap_or(""),
            ))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the CSV format written by [`ScalarFeatureSet::write_csv`].
    pub fn read_csv<R: Read>(reader: R, source: SetSource) -> Result<Self>
    where
        T: serde::de::DeserializeOwned,
    {
        let mut input = csv::Reader::from_reader(reader);
        let mut ids = Vec::new();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut cluster_of = Vec::new();
        for record in input.deserialize() {
            let (id, cluster, scalar, label): (String, usize, T, String) = record?;
            ids.push(id);
            cluster_of.push(cluster);
            values.push(scalar);
            labels.push(if label.is_empty() { None } else { Some(label) });
        }
        Ok(ScalarFeatureSet {
            ids,
            values,
            labels,
            cluster_of,
            source,
        })
    }
}

fn centroid_distance_sum<T: Real>(
    sample: ndarray::ArrayView1<'_, T>,
    model: &ClusterModel<T>,
    measure: &crate::similarity::SimilarityMeasure<T>,
) -> Result<T> {
    let mut total = T::zero();
    for centroid in model.centroids.rows() {
        total += measure.distance(sample, centroid)?;
    }
    Ok(total)
}

/// Compresses the training matrix the model was fitted on. For sample
/// `i`: sum of distances to all k centroids, plus the minimum distance to
/// another member of its own cluster (0 for singletons).
pub fn reduce_train<T: Real>(
    matrix: &FrequencyMatrix<T>,
    model: &ClusterModel<T>,
) -> Result<ScalarFeatureSet<T>> {
    let n = matrix.n_samples();
    if model.assignments.len() != n {
        return Err(Error::validation(format!(
            "model was fit on {} samples but the matrix has {n}",
            model.assignments.len()
        )));
    }
    if model.n_features() != matrix.n_features() {
        return Err(Error::LengthMismatch {
            left: model.n_features(),
            right: matrix.n_features(),
        });
    }
    let measure = model.measure();
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let row = matrix.row(i);
        let centers = centroid_distance_sum(row, model, &measure)?;
        let mut neighbor: Option<T> = None;
        for j in 0..n {
            if j == i || model.assignments[j] != model.assignments[i] {
                continue;
            }
            let d = measure.distance(row, matrix.row(j))?;
            neighbor = Some(match neighbor {
                None => d,
                Some(best) => best.min(d),
            });
        }
        values.push(centers + neighbor.unwrap_or_else(T::zero));
    }
    Ok(ScalarFeatureSet {
        ids: matrix.rows.clone(),
        values,
        labels: matrix.labels.clone(),
        cluster_of: model.assignments.clone(),
        source: SetSource::Train,
    })
}

/// Compresses a test matrix against a fitted model. Each sample is
/// assigned to its nearest centroid; the neighbor term is the minimum
/// distance to a *training* member of that cluster.
pub fn reduce_test<T: Real>(
    test_matrix: &FrequencyMatrix<T>,
    model: &ClusterModel<T>,
    train_matrix: &FrequencyMatrix<T>,
) -> Result<ScalarFeatureSet<T>> {
    if test_matrix.vocab != train_matrix.vocab {
        return Err(Error::validation(
            "vocabulary mismatch between test and training matrices",
        ));
    }
    if model.assignments.len() != train_matrix.n_samples() {
        return Err(Error::validation(format!(
            "model was fit on {} samples but the training matrix has {}",
            model.assignments.len(),
            train_matrix.n_samples()
        )));
    }
    if model.n_features() != test_matrix.n_features() {
        return Err(Error::LengthMismatch {
            left: model.n_features(),
            right: test_matrix.n_features(),
        });
    }
    let measure = model.measure();
    let n = test_matrix.n_samples();
    let mut values = Vec::with_capacity(n);
    let mut cluster_of = Vec::with_capacity(n);
    for i in 0..n {
        let row = test_matrix.row(i);
        let cluster = model.assign(row)?;
        let centers = centroid_distance_sum(row, model, &measure)?;
        let mut neighbor: Option<T> = None;
        for (j, &assigned) in model.assignments.iter().enumerate() {
            if assigned != cluster {
                continue;
            }
            let d = measure.distance(row, train_matrix.row(j))?;
            neighbor = Some(match neighbor {
                None => d,
                Some(best) => best.min(d),
            });
        }
        values.push(centers + neighbor.unwrap_or_else(T::zero));
        cluster_of.push(cluster);
    }
    Ok(ScalarFeatureSet {
        ids: test_matrix.rows.clone(),
        values,
        labels: test_matrix.labels.clone(),
        cluster_of,
        source: SetSource::Test,
    })
}
