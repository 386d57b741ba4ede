//! Nearest-neighbor classification over singleton scalars (the pipeline's
//! last stage) or raw frequency vectors, plus confusion-matrix scoring.
//!
//! Tie-breaking is deterministic at every level: neighbor ranking breaks
//! distance ties by the lower sample index, vote ties go to the label
//! whose nearest ranked member is closest, and any remaining tie goes to
//! the label that appears first in the training data.

use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FrequencyMatrix;
use crate::scalar_reduce::ScalarFeatureSet;
use crate::similarity::SimilarityMeasure;
use crate::Real;

/// Confusion matrix plus the derived rates. Rows of `confusion` are truth,
/// columns are predictions, both in `class_order` (designated normal label
/// first). The `*_defined` flags are false when the corresponding rate had
/// an empty denominator and was reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport<T> {
    pub class_order: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: T,
    pub detection_rate: T,
    pub false_alarm_rate: T,
    pub per_class_recall: Vec<T>,
    pub detection_rate_defined: bool,
    pub false_alarm_rate_defined: bool,
}

impl<T: Real> EvaluationReport<T> {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Plain-text rendering for terminal output.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let width = self
            .class_order
            .iter()
            .map(|c| c.len())
            .max()
            .unwrap_or(0)
            .max(6)
            + 2;
        let _ = write!(out, "{:>w$} |", "truth\\pred", w = width + 4);
        for label in &self.class_order {
            let _ = write!(out, " {label:>w$}", w = width);
        }
        out.push('\n');
        for (i, label) in self.class_order.iter().enumerate() {
            let _ = write!(out, "{:>w$} |", label, w = width + 4);
            for count in &self.confusion[i] {
                let _ = write!(out, " {count:>w$}", w = width);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "accuracy:         {}", self.accuracy);
        let _ = writeln!(
            out,
            "detection rate:   {}{}",
            self.detection_rate,
            if self.detection_rate_defined { "" } else { " (no attack samples)" }
        );
        let _ = writeln!(
            out,
            "false alarm rate: {}{}",
            self.false_alarm_rate,
            if self.false_alarm_rate_defined { "" } else { " (no normal samples)" }
        );
        out
    }
}

/// Ranked neighbor: distance (lower is nearer), original sample index,
/// label.
struct Neighbor<'a, T> {
    distance: T,
    index: usize,
    label: &'a str,
}

/// Majority vote over the first `k` ranked neighbors.
fn vote<T: Real>(
    ranked: &[Neighbor<'_, T>],
    k: usize,
    appearance: &HashMap<&str, usize>,
) -> String {
    let ranked = &ranked[..k];
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for n in ranked {
        *counts.entry(n.label).or_insert(0) += 1;
    }
    let best_count = counts.values().copied().max().unwrap();
    let mut winner: Option<(&str, T, usize)> = None;
    for n in ranked {
        if counts[n.label] != best_count {
            continue;
        }
        // first occurrence per label is its nearest ranked member
        if winner.as_ref().is_some_and(|(label, _, _)| *label == n.label) {
            continue;
        }
        let rank = appearance[n.label];
        let replace = match &winner {
            None => true,
            Some((_, d, r)) => n.distance < *d || (n.distance == *d && rank < *r),
        };
        if replace {
            winner = Some((n.label, n.distance, rank));
        }
    }
    winner.unwrap().0.to_string()
}

fn appearance_order<'a, I>(labels: I) -> HashMap<&'a str, usize>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut order = HashMap::new();
    for label in labels {
        let next = order.len();
        order.entry(label).or_insert(next);
    }
    order
}

/// Classifies a scalar query as the majority label of the `k` training
/// scalars nearest to it.
pub fn knn_scalar<T: Real>(train: &ScalarFeatureSet<T>, query: T, k: usize) -> Result<String> {
    if train.is_empty() {
        return Err(Error::validation("empty training set"));
    }
    if k == 0 {
        return Err(Error::config("k must be >= 1"));
    }
    if k > train.len() {
        return Err(Error::config(format!(
            "k = {k} exceeds training size {}",
            train.len()
        )));
    }
    let labels: Vec<&str> = train
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.as_deref().ok_or_else(|| {
                Error::validation(format!("training sample {i} has no label"))
            })
        })
        .collect::<Result<_>>()?;
    let mut ranked: Vec<Neighbor<'_, T>> = train
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| Neighbor {
            distance: (v - query).abs(),
            index: i,
            label: labels[i],
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .unwrap()
            .then(a.index.cmp(&b.index))
    });
    Ok(vote(&ranked, k, &appearance_order(labels.iter().copied())))
}

/// Classifies a vector query as the majority label of the `k` most
/// similar training rows under the given measure.
pub fn knn_vector<T: Real>(
    train: &FrequencyMatrix<T>,
    query: ArrayView1<'_, T>,
    measure: &SimilarityMeasure<T>,
    k: usize,
) -> Result<String> {
    let n = train.n_samples();
    if n == 0 {
        return Err(Error::validation("empty training set"));
    }
    if k == 0 {
        return Err(Error::config("k must be >= 1"));
    }
    if k > n {
        return Err(Error::config(format!("k = {k} exceeds training size {n}")));
    }
    let labels: Vec<&str> = train
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.as_deref().ok_or_else(|| {
                Error::validation(format!("training sample {i} has no label"))
            })
        })
        .collect::<Result<_>>()?;
    let mut ranked = Vec::with_capacity(n);
    for i in 0..n {
        ranked.push(Neighbor {
            distance: measure.distance(query, train.row(i))?,
            index: i,
            label: labels[i],
        });
    }
    ranked.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .unwrap()
            .then(a.index.cmp(&b.index))
    });
    Ok(vote(&ranked, k, &appearance_order(labels.iter().copied())))
}

/// Builds the confusion matrix and the derived rates. Attacks are all
/// classes other than `normal_label`, which always heads `class_order`
/// (remaining labels sorted).
pub fn evaluate<T: Real>(
    predictions: &[String],
    truth: &[String],
    normal_label: &str,
) -> Result<EvaluationReport<T>> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::validation("no samples to evaluate"));
    }
    let mut others: Vec<String> = truth
        .iter()
        .chain(predictions.iter())
        .filter(|l| l.as_str() != normal_label)
        .cloned()
        .collect();
    others.sort();
    others.dedup();
    let mut class_order = vec![normal_label.to_string()];
    class_order.extend(others);
    let position: HashMap<&str, usize> = class_order
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    let c = class_order.len();
    let mut confusion = vec![vec![0usize; c]; c];
    let mut attack_truths = 0usize;
    let mut detected_attacks = 0usize;
    let mut normal_truths = 0usize;
    let mut false_alarms = 0usize;
    for (p, t) in predictions.iter().zip(truth.iter()) {
        confusion[position[t.as_str()]][position[p.as_str()]] += 1;
        let truth_is_attack = t != normal_label;
        let predicted_attack = p != normal_label;
        if truth_is_attack {
            attack_truths += 1;
            if predicted_attack {
                detected_attacks += 1;
            }
        } else {
            normal_truths += 1;
            if predicted_attack {
                false_alarms += 1;
            }
        }
    }

    let as_t = |v: usize| T::from_usize(v).unwrap();
    let total = truth.len();
    let correct: usize = (0..c).map(|i| confusion[i][i]).sum();
    let accuracy = as_t(correct) / as_t(total);
    let detection_rate_defined = attack_truths > 0;
    let detection_rate = if detection_rate_defined {
        as_t(detected_attacks) / as_t(attack_truths)
    } else {
        T::zero()
    };
    let false_alarm_rate_defined = normal_truths > 0;
    let false_alarm_rate = if false_alarm_rate_defined {
        as_t(false_alarms) / as_t(normal_truths)
    } else {
        T::zero()
    };
    let per_class_recall = (0..c)
        .map(|i| {
            let row_total: usize = confusion[i].iter().sum();
            if row_total == 0 {
                T::zero()
            } else {
                as_t(confusion[i][i]) / as_t(row_total)
            }
        })
        .collect();

    Ok(EvaluationReport {
        class_order,
        confusion,
        accuracy,
        detection_rate,
        false_alarm_rate,
        per_class_recall,
        detection_rate_defined,
        false_alarm_rate_defined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{MatrixMode, SyscallVocabulary};
    use crate::scalar_reduce::SetSource;
    use crate::similarity::FeatureStats;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn scalar_set(pairs: &[(f64, &str)]) -> ScalarFeatureSet<f64> {
        ScalarFeatureSet {
            ids: (0..pairs.len()).map(|i| format!("s{i}")).collect(),
            values: pairs.iter().map(|(v, _)| *v).collect(),
            labels: pairs.iter().map(|(_, l)| Some(l.to_string())).collect(),
            cluster_of: vec![0; pairs.len()],
            source: SetSource::Train,
        }
    }

    fn labeled_matrix(values: Array2<f64>, labels: &[&str]) -> FrequencyMatrix<f64> {
        let m = values.ncols();
        let tokens: Vec<String> = (0..m).map(|j| format!("c{j}")).collect();
        FrequencyMatrix::new(
            (0..values.nrows()).map(|i| format!("r{i}")).collect(),
            SyscallVocabulary::from_tokens(tokens),
            MatrixMode::Count,
            values,
            labels.iter().map(|l| Some(l.to_string())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn nearest_scalar_wins_at_k1() {
        let train = scalar_set(&[(1.0, "A"), (5.0, "B")]);
        assert_eq!(knn_scalar(&train, 1.2, 1).unwrap(), "A");
    }

    #[test]
    fn exact_scalar_match_returns_its_label() {
        let train = scalar_set(&[(1.0, "A"), (5.0, "B")]);
        assert_eq!(knn_scalar(&train, 5.0, 1).unwrap(), "B");
    }

    #[test]
    fn majority_vote_at_k3() {
        let train = scalar_set(&[(1.0, "A"), (2.0, "A"), (3.0, "B")]);
        assert_eq!(knn_scalar(&train, 2.6, 3).unwrap(), "A");
    }

    #[test]
    fn scalar_parameter_validation() {
        let train = scalar_set(&[(1.0, "A")]);
        assert!(knn_scalar(&train, 0.0, 0).is_err());
        assert!(knn_scalar(&train, 0.0, 2).is_err());
        let mut unlabeled = train.clone();
        unlabeled.labels[0] = None;
        assert!(knn_scalar(&unlabeled, 0.0, 1).is_err());
    }

    #[test]
    fn vote_tie_falls_back_to_nearest_member() {
        // k = 2: one A at distance 0.1, one B at distance 0.3
        let train = scalar_set(&[(1.0, "A"), (1.4, "B"), (9.0, "B")]);
        assert_eq!(knn_scalar(&train, 1.1, 2).unwrap(), "A");
    }

    #[test]
    fn full_tie_falls_back_to_appearance_order() {
        // two labels at exactly symmetric distances
        let train = scalar_set(&[(1.0, "B"), (3.0, "A")]);
        assert_eq!(knn_scalar(&train, 2.0, 2).unwrap(), "B");
    }

    #[test]
    fn vector_query_identical_to_row() {
        let m = labeled_matrix(array![[1.0, 0.0], [0.0, 1.0]], &["A", "B"]);
        let q = array![0.0, 1.0];
        for measure in [
            SimilarityMeasure::cosine(),
            SimilarityMeasure::jaccard(),
            SimilarityMeasure::idsim(FeatureStats::from_matrix(&m)),
        ] {
            assert_eq!(knn_vector(&m, q.view(), &measure, 1).unwrap(), "B");
        }
    }

    #[test]
    fn orthogonal_classes_under_cosine() {
        let m = labeled_matrix(
            array![[3.0, 0.0], [2.0, 0.0], [0.0, 5.0], [0.0, 1.0]],
            &["A", "A", "B", "B"],
        );
        let q = array![7.0, 0.1];
        assert_eq!(
            knn_vector(&m, q.view(), &SimilarityMeasure::cosine(), 1).unwrap(),
            "A"
        );
    }

    #[test]
    fn perfect_predictions() {
        let truth: Vec<String> = ["normal", "dos", "probe"].map(String::from).into();
        let report = evaluate::<f64>(&truth.clone(), &truth, "normal").unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.false_alarm_rate, 0.0);
        assert_eq!(report.detection_rate, 1.0);
        assert_eq!(report.class_order[0], "normal");
        assert_eq!(report.per_class_recall, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn degenerate_denominators_are_flagged() {
        let truth: Vec<String> = ["normal", "normal"].map(String::from).into();
        let predictions: Vec<String> = ["dos", "dos"].map(String::from).into();
        let report = evaluate::<f64>(&predictions, &truth, "normal").unwrap();
        assert_eq!(report.false_alarm_rate, 1.0);
        assert_eq!(report.detection_rate, 0.0);
        assert!(!report.detection_rate_defined);
        assert!(report.false_alarm_rate_defined);
    }

    #[test]
    fn two_by_two_hand_confusion() {
        let truth: Vec<String> = ["N", "N", "A", "A"].map(String::from).into();
        let predictions: Vec<String> = ["N", "A", "A", "N"].map(String::from).into();
        let report = evaluate::<f64>(&predictions, &truth, "N").unwrap();
        assert_eq!(report.accuracy, 0.5);
        assert_eq!(report.detection_rate, 0.5);
        assert_eq!(report.false_alarm_rate, 0.5);
        assert_eq!(report.confusion, vec![vec![1, 1], vec![1, 1]]);
    }

    #[test]
    fn confusion_rows_sum_to_truth_counts() {
        let truth: Vec<String> = ["N", "A", "A", "B", "N"].map(String::from).into();
        let predictions: Vec<String> = ["A", "A", "B", "B", "N"].map(String::from).into();
        let report = evaluate::<f64>(&predictions, &truth, "N").unwrap();
        assert_eq!(report.total(), 5);
        for (i, label) in report.class_order.iter().enumerate() {
            let row_sum: usize = report.confusion[i].iter().sum();
            let expected = truth.iter().filter(|t| *t == label).count();
            assert_eq!(row_sum, expected);
        }
        // metrics recomputed from the matrix agree with the scalars
        let correct: usize = (0..3).map(|i| report.confusion[i][i]).sum();
        assert_eq!(report.accuracy, correct as f64 / 5.0);
    }

    #[test]
    fn evaluate_validates_lengths() {
        let a: Vec<String> = vec!["x".into()];
        assert!(evaluate::<f64>(&a, &[], "x").is_err());
        assert!(evaluate::<f64>(&[], &[], "x").is_err());
    }

    #[test]
    fn monotone_k_inside_a_class_band() {
        let train = scalar_set(&[
            (1.0, "A"),
            (2.0, "A"),
            (3.0, "A"),
            (4.0, "A"),
            (5.0, "A"),
            (11.0, "B"),
            (12.0, "B"),
            (13.0, "B"),
            (14.0, "B"),
            (15.0, "B"),
        ]);
        for k in 1..=5 {
            assert_eq!(knn_scalar(&train, 3.0, k).unwrap(), "A", "k = {k}");
        }
    }

    #[test]
    fn table_renders_every_class() {
        let truth: Vec<String> = ["normal", "dos"].map(String::from).into();
        let report = evaluate::<f64>(&truth.clone(), &truth, "normal").unwrap();
        let table = report.render_table();
        assert!(table.contains("normal"));
        assert!(table.contains("dos"));
        assert!(table.contains("accuracy"));
    }

    proptest! {
        #[test]
        fn row_order_invariance_with_distinct_similarities(
            raw in proptest::collection::vec(
                proptest::collection::vec(0u32..8, 3),
                5,
            ),
            shift in 1usize..5,
            k in 1usize..4,
        ) {
            let rows: Vec<Vec<f64>> = raw
                .iter()
                .map(|r| r.iter().map(|&v| v as f64).collect())
                .collect();
            let labels = ["A", "B", "A", "B", "B"];
            let query = [1.0, 2.0, 3.0];
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let base = labeled_matrix(
                Array2::from_shape_vec((5, 3), flat).unwrap(),
                &labels,
            );
            let measure = SimilarityMeasure::cosine();
            let q = ndarray::aview1(&query);
            // require pairwise-distinct similarities
            let mut sims: Vec<f64> = (0..5)
                .map(|i| measure.similarity(q, base.row(i)).unwrap())
                .collect();
            sims.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assume!(sims.windows(2).all(|w| w[0] != w[1]));

            let rotated_rows: Vec<Vec<f64>> = (0..5)
                .map(|i| rows[(i + shift) % 5].clone())
                .collect();
            let rotated_labels: Vec<&str> =
                (0..5).map(|i| labels[(i + shift) % 5]).collect();
            let rotated = labeled_matrix(
                Array2::from_shape_vec((5, 3), rotated_rows.into_iter().flatten().collect())
                    .unwrap(),
                &rotated_labels,
            );
            prop_assert_eq!(
                knn_vector(&base, q, &measure, k).unwrap(),
                knn_vector(&rotated, q, &measure, k).unwrap()
            );
        }
    }
}
