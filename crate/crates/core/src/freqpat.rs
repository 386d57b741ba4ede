//! Frequent system-call itemset mining over binary matrices: classic
//! level-wise Apriori with downward-closure pruning. Support is the
//! fraction of rows containing every item of the set.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FrequencyMatrix, MatrixMode};
use crate::Real;

/// One frequent itemset: tokens, absolute row count, fraction of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Itemset<T> {
    pub tokens: Vec<String>,
    pub count: usize,
    pub fraction: T,
}

/// All itemsets at or above `min_support`, ordered by size then
/// lexicographically by tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequentItemsets<T> {
    pub min_support: T,
    pub itemsets: Vec<Itemset<T>>,
}

impl<T: Real> FrequentItemsets<T> {
    /// Sorted plain-text listing, one itemset per line.
    pub fn render_listing(&self) -> String {
        let mut out = String::new();
        for set in &self.itemsets {
            let _ = writeln!(
                out,
                "{{{}}}  count={}  support={}",
                set.tokens.join(", "),
                set.count,
                set.fraction
            );
        }
        out
    }
}

fn support_count(rows: &[Vec<bool>], items: &[usize]) -> usize {
    rows.iter()
        .filter(|row| items.iter().all(|&j| row[j]))
        .count()
}

/// Level-wise Apriori over a binary matrix. Complete: every itemset whose
/// support fraction reaches `min_support` is reported.
pub fn apriori<T: Real>(matrix: &FrequencyMatrix<T>, min_support: T) -> Result<FrequentItemsets<T>> {
    if matrix.mode != MatrixMode::Binary {
        return Err(Error::validation(
            "apriori requires a binary matrix; rebuild with mode=binary",
        ));
    }
    if min_support <= T::zero() || min_support > T::one() {
        return Err(Error::config("min_support must be in (0, 1]"));
    }
    let n = matrix.n_samples();
    let m = matrix.n_features();
    if n == 0 || m == 0 {
        return Err(Error::validation("empty matrix"));
    }
    let rows: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..m).map(|j| matrix.values[[i, j]] > T::zero()).collect())
        .collect();
    let n_t = T::from_usize(n).unwrap();
    let frequent = |count: usize| T::from_usize(count).unwrap() / n_t >= min_support;

    let mut found: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut level: Vec<Vec<usize>> = (0..m)
        .map(|j| vec![j])
        .filter(|items| frequent(support_count(&rows, items)))
        .collect();
    while !level.is_empty() {
        let survivors: Vec<(Vec<usize>, usize)> = level
            .iter()
            .map(|items| (items.clone(), support_count(&rows, items)))
            .collect();
        found.extend(survivors);

        let prev: HashSet<&[usize]> = level.iter().map(Vec::as_slice).collect();
        let mut next = Vec::new();
        for a in 0..level.len() {
            for b in (a + 1)..level.len() {
                let (left, right) = (&level[a], &level[b]);
                let len = left.len();
                if left[..len - 1] != right[..len - 1] {
                    continue;
                }
                let mut candidate = left.clone();
                candidate.push(right[len - 1]);
                // downward closure: every (len)-subset must be frequent
                let mut subset = Vec::with_capacity(len);
                let closed = (0..candidate.len()).all(|skip| {
                    subset.clear();
                    subset.extend(
                        candidate
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != skip)
                            .map(|(_, &v)| v),
                    );
                    prev.contains(subset.as_slice())
                });
                if closed && frequent(support_count(&rows, &candidate)) {
                    next.push(candidate);
                }
            }
        }
        level = next;
    }

    let mut itemsets: Vec<Itemset<T>> = found
        .into_iter()
        .map(|(items, count)| Itemset {
            tokens: items
                .iter()
                .map(|&j| matrix.vocab.token(j).to_string())
                .collect(),
            count,
            fraction: T::from_usize(count).unwrap() / n_t,
        })
        .collect();
    itemsets.sort_by(|a, b| a.tokens.len().cmp(&b.tokens.len()).then(a.tokens.cmp(&b.tokens)));
    Ok(FrequentItemsets {
        min_support,
        itemsets,
    })
}
