use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SyscallTrace;

/// Per-class usage profile: token → mean occurrences per trace.
pub type ClassProfile = BTreeMap<String, f64>;

/// Generator configuration for synthetic trace datasets.
///
/// A rate `r` yields `floor(r)` guaranteed occurrences plus one more with
/// probability `frac(r)`, so integer rates are exact: rate 1.0 puts the
/// token in every trace, rate 0.0 in none. Traces shorter than a target
/// length drawn from `min_len..=max_len` are padded with extra draws
/// weighted by the rates; guaranteed occurrences are never truncated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Class label → usage profile. Classes are generated in label order.
    pub classes: BTreeMap<String, ClassProfile>,
    pub samples_per_class: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::config("synthetic spec declares no classes"));
        }
        if self.samples_per_class == 0 {
            return Err(Error::config("samples_per_class must be >= 1"));
        }
        if self.min_len == 0 {
            return Err(Error::config("min_len must be >= 1 (traces cannot be empty)"));
        }
        if self.min_len > self.max_len {
            return Err(Error::config("min_len must not exceed max_len"));
        }
        for (label, profile) in &self.classes {
            if profile.values().any(|r| !r.is_finite() || *r < 0.0) {
                return Err(Error::config(format!(
                    "class \"{label}\": rates must be finite and >= 0"
                )));
            }
            if !profile.values().any(|r| *r > 0.0) {
                return Err(Error::config(format!(
                    "class \"{label}\": at least one rate must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Generates a labeled synthetic dataset; a pure function of
/// `(spec, seed)`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Vec<SyscallTrace>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(spec.classes.len() * spec.samples_per_class);
    for (label, profile) in &spec.classes {
        let weighted: Vec<(&str, f64)> = profile
            .iter()
            .filter(|(_, &r)| r > 0.0)
            .map(|(t, &r)| (t.as_str(), r))
            .collect();
        let total_weight: f64 = weighted.iter().map(|(_, r)| r).sum();
        for i in 0..spec.samples_per_class {
            let target_len = rng.random_range(spec.min_len..=spec.max_len);
            let mut calls: Vec<String> = Vec::new();
            for (token, rate) in &weighted {
                let guaranteed = rate.floor() as usize;
                let fraction = rate - rate.floor();
                let extra = fraction > 0.0 && rng.random::<f64>() < fraction;
                for _ in 0..guaranteed + usize::from(extra) {
                    calls.push((*token).to_string());
                }
            }
            while calls.len() < target_len {
                let mut pick = rng.random::<f64>() * total_weight;
                let mut chosen = weighted[weighted.len() - 1].0;
                for (token, rate) in &weighted {
                    if pick < *rate {
                        chosen = token;
                        break;
                    }
                    pick -= rate;
                }
                calls.push(chosen.to_string());
            }
            // Fisher-Yates so the multiset reads as a call sequence
            for j in (1..calls.len()).rev() {
                let r = rng.random_range(0..=j);
                calls.swap(j, r);
            }
            traces.push(SyscallTrace {
                trace_id: format!("{label}-{i:04}"),
                label: Some(label.clone()),
                calls,
            });
        }
    }
    Ok(traces)
}
