use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compile::CompiledTerminology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("terminology has no medications or no common forms")]
pub struct EmptyTerminology;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvalidDistribution {
    #[error("probability {0} at index {1} is negative or not finite")]
    BadProbability(f64, usize),
    #[error("probabilities sum to {0}, not 1")]
    Sum(f64),
    #[error("logarithm base {0} is not usable")]
    Base(f64),
}

const SUM_TOLERANCE: f64 = 1e-9;

/// Shannon entropy `-Σ p log_b p`, with `0 log 0 = 0`.
pub fn entropy_bits(distribution: &[f64], base: f64) -> Result<f64, InvalidDistribution> {
    if !(base.is_finite() && base > 0.0 && base != 1.0) {
        return Err(InvalidDistribution::Base(base));
    }
    let mut sum = 0.0;
    let mut h = 0.0;
    for (i, &p) in distribution.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(InvalidDistribution::BadProbability(p, i));
        }
        sum += p;
        if p > 0.0 {
            h -= p * p.log(base);
        }
    }
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(InvalidDistribution::Sum(sum));
    }
    Ok(h)
}

/// Mean children per medication: `(forms per med, distinct units per med)`.
pub fn branching_factors(terminology: &CompiledTerminology) -> Result<(f64, f64), EmptyTerminology> {
    branching_factors_from_counts(
        terminology.med_list().len(),
        terminology.med_list_common().len(),
        terminology.med_list_dose().len(),
    )
}

pub fn branching_factors_from_counts(
    n_medications: usize,
    n_common_forms: usize,
    n_dose_units: usize,
) -> Result<(f64, f64), EmptyTerminology> {
    if n_medications == 0 {
        return Err(EmptyTerminology);
    }
    let m = n_medications as f64;
    Ok((n_common_forms as f64 / m, n_dose_units as f64 / m))
}

/// Share of search-cache rows saved by listing medications instead of
/// every medication/form combination.
pub fn cache_reduction(terminology: &CompiledTerminology) -> Result<f64, EmptyTerminology> {
    cache_reduction_from_counts(terminology.med_list().len(), terminology.med_list_common().len())
}

pub fn cache_reduction_from_counts(n_medications: usize, n_common_forms: usize) -> Result<f64, EmptyTerminology> {
    if n_common_forms == 0 {
        return Err(EmptyTerminology);
    }
    Ok(1.0 - n_medications as f64 / n_common_forms as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyComparison {
    /// Uniform over every medication/form combination.
    pub flat_bits: f64,
    /// `log n_medications + log bf_forms + log bf_units`.
    pub factored_bits: f64,
}

/// Flat and factored entropy of a terminology, in base-`base` units.
pub fn entropy_comparison(terminology: &CompiledTerminology, base: f64) -> Result<EntropyComparison, EmptyTerminology> {
    let (bf_forms, bf_units) = branching_factors(terminology)?;
    entropy_comparison_from_counts(
        terminology.med_list().len(),
        terminology.med_list_common().len(),
        bf_forms,
        bf_units,
        base,
    )
}

pub fn entropy_comparison_from_counts(
    n_medications: usize,
    n_common_forms: usize,
    bf_forms: f64,
    bf_units: f64,
    base: f64,
) -> Result<EntropyComparison, EmptyTerminology> {
    if n_medications == 0 || n_common_forms == 0 || bf_forms <= 0.0 || bf_units <= 0.0 {
        return Err(EmptyTerminology);
    }
    let uniform = vec![1.0 / n_common_forms as f64; n_common_forms];
    let flat_bits = entropy_bits(&uniform, base).map_err(|_| EmptyTerminology)?;
    let log = |x: f64| x.log(base);
    Ok(EntropyComparison {
        flat_bits,
        factored_bits: log(n_medications as f64) + log(bf_forms) + log(bf_units),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureMetrics {
    pub n_medications: usize,
    pub n_common_forms: usize,
    pub bf_forms: f64,
    pub bf_units: f64,
    pub cache_reduction: f64,
    pub entropy_flat_bits: f64,
    pub entropy_factored_bits: f64,
}

impl StructureMetrics {
    pub fn of(terminology: &CompiledTerminology) -> Result<Self, EmptyTerminology> {
        let (bf_forms, bf_units) = branching_factors(terminology)?;
        Self::from_counts(
            terminology.med_list().len(),
            terminology.med_list_common().len(),
            bf_forms,
            bf_units,
        )
    }

    /// Metrics from bare counts, with branching factors supplied directly.
    pub fn from_counts(
        n_medications: usize,
        n_common_forms: usize,
        bf_forms: f64,
        bf_units: f64,
    ) -> Result<Self, EmptyTerminology> {
        let entropy = entropy_comparison_from_counts(n_medications, n_common_forms, bf_forms, bf_units, 2.0)?;
        Ok(StructureMetrics {
            n_medications,
            n_common_forms,
            bf_forms,
            bf_units,
            cache_reduction: cache_reduction_from_counts(n_medications, n_common_forms)?,
            entropy_flat_bits: entropy.flat_bits,
            entropy_factored_bits: entropy.factored_bits,
        })
    }
}

/// The `p`-quantile (`0 ≤ p ≤ 1`) of `samples`, taking the sorted value at
/// index `ceil(p · (n − 1))`. Never interpolates, so the result is always an
/// observed sample.
pub fn percentile(samples: &[f64], p: f64) -> Option<f64> {
    if samples.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = (p * (sorted.len() - 1) as f64).ceil() as usize;
    Some(sorted[idx.min(sorted.len() - 1)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub samples: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl LatencySummary {
    pub fn from_millis(samples: &[f64]) -> Option<Self> {
        let q = |p| percentile(samples, p);
        Some(LatencySummary {
            samples: samples.len(),
            mean_ms: samples.iter().sum::<f64>() / samples.len() as f64,
            p50_ms: q(0.50)?,
            p95_ms: q(0.95)?,
            p99_ms: q(0.99)?,
            max_ms: q(1.0)?,
        })
    }

    pub fn from_durations(samples: &[Duration]) -> Option<Self> {
        let ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        Self::from_millis(&ms)
    }
}
