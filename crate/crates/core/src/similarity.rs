//! Bounded Gaussian similarity between process vectors and centroids.
//!
//! For two vectors `a` and `b`, each system call that is active in either of
//! them contributes `exp(-((a_s - b_s) / sigma_s)^2)`. The terms are averaged
//! over the active calls and mapped to `(1 + avg) / 2`, so any pair with at
//! least one active call scores in `[0.5, 1]`. Two all-zero vectors are
//! identical and score exactly 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{LabeledDataset, ProcessVector};

/// Exponent beyond which `exp(-q)` is exactly `0.0` in `f64`.
const EXP_UNDERFLOW: f64 = 746.0;

/// How the Gaussian width of each system call is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaStrategy {
    /// One width shared by every call.
    Constant { sigma: f64 },
    /// Population standard deviation of each call over the training set.
    PerCallTrainingStd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub sigma_strategy: SigmaStrategy,
    /// Width substituted for calls whose training deviation is zero.
    pub zero_sigma_epsilon: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            sigma_strategy: SigmaStrategy::Constant { sigma: 0.5 },
            zero_sigma_epsilon: 1e-6,
        }
    }
}

impl SimilarityConfig {
    pub fn constant(sigma: f64) -> Self {
        Self {
            sigma_strategy: SigmaStrategy::Constant { sigma },
            ..Self::default()
        }
    }

    pub fn per_call_training_std() -> Self {
        Self {
            sigma_strategy: SigmaStrategy::PerCallTrainingStd,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SigmaStrategy::Constant { sigma } = self.sigma_strategy {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "sigma must be positive, got {sigma}"
                )));
            }
        }
        let eps = self.zero_sigma_epsilon;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "zero-sigma epsilon must be positive, got {eps}"
            )));
        }
        Ok(())
    }

    /// Fixes the per-call widths against a training set.
    pub fn resolve(&self, training: &LabeledDataset) -> Result<Idsim> {
        self.validate()?;
        let sigmas = match self.sigma_strategy {
            SigmaStrategy::Constant { sigma } => Sigmas::Constant(sigma),
            SigmaStrategy::PerCallTrainingStd => {
                if training.is_empty() {
                    return Err(Error::EmptyDataset);
                }
                let n = training.len() as f64;
                let sigmas = (0..training.dims())
                    .map(|s| {
                        let mean = training.processes().iter().map(|p| p.values()[s]).sum::<f64>() / n;
                        let var = training
                            .processes()
                            .iter()
                            .map(|p| (p.values()[s] - mean).powi(2))
                            .sum::<f64>()
                            / n;
                        let std = var.sqrt();
                        if std > 0.0 {
                            std
                        } else {
                            self.zero_sigma_epsilon
                        }
                    })
                    .collect();
                Sigmas::PerCall(sigmas)
            }
        };
        Ok(Idsim {
            config: *self,
            sigmas,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Sigmas {
    Constant(f64),
    PerCall(Vec<f64>),
}

/// The similarity measure with its widths fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Idsim {
    config: SimilarityConfig,
    sigmas: Sigmas,
}

impl Default for Idsim {
    fn default() -> Self {
        Self::constant(0.5).expect("default sigma is valid")
    }
}

impl Idsim {
    pub fn constant(sigma: f64) -> Result<Self> {
        let config = SimilarityConfig::constant(sigma);
        config.validate()?;
        Ok(Self {
            config,
            sigmas: Sigmas::Constant(sigma),
        })
    }

    /// Rebuilds a measure from previously resolved widths.
    pub fn from_parts(config: SimilarityConfig, sigmas: Sigmas) -> Result<Self> {
        config.validate()?;
        match (&config.sigma_strategy, &sigmas) {
            (SigmaStrategy::Constant { sigma }, Sigmas::Constant(s)) if sigma == s => {}
            (SigmaStrategy::PerCallTrainingStd, Sigmas::PerCall(values))
                if values.iter().all(|s| *s > 0.0 && s.is_finite()) => {}
            _ => {
                return Err(Error::InvalidConfig(
                    "resolved sigmas do not match the sigma strategy".to_string(),
                ))
            }
        }
        Ok(Self { config, sigmas })
    }

    pub fn config(&self) -> &SimilarityConfig {
        &self.config
    }

    pub fn sigmas(&self) -> &Sigmas {
        &self.sigmas
    }

    /// Fails if this measure cannot be applied to vectors of `dims` calls.
    pub fn check_dims(&self, dims: usize) -> Result<()> {
        match &self.sigmas {
            Sigmas::PerCall(v) if v.len() != dims => Err(Error::LengthMismatch {
                expected: v.len(),
                found: dims,
            }),
            _ => Ok(()),
        }
    }

    #[inline]
    fn sigma(&self, s: usize) -> f64 {
        match &self.sigmas {
            Sigmas::Constant(sigma) => *sigma,
            Sigmas::PerCall(v) => v[s],
        }
    }

    pub fn similarity(&self, a: &[f64], b: &[f64]) -> Result<SimilarityValue> {
        check_lengths(a, b)?;
        self.check_dims(a.len())?;
        Ok(SimilarityValue(self.score(a, b)))
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.similarity(a, b).map(SimilarityValue::distance)
    }

    /// Unchecked kernel; callers guarantee equal lengths matching the widths.
    #[inline]
    pub(crate) fn score(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut active = 0usize;
        for (s, (&x, &y)) in a.iter().zip(b).enumerate() {
            if x > 0.0 || y > 0.0 {
                active += 1;
                let z = (x - y) / self.sigma(s);
                let q = z * z;
                if q < EXP_UNDERFLOW {
                    sum += (-q).exp();
                }
            }
        }
        if active == 0 {
            return 1.0;
        }
        (1.0 + sum / active as f64) / 2.0
    }
}

/// An IDSIM value in `[0.5, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityValue(f64);

impl SimilarityValue {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn distance(self) -> f64 {
        1.0 - self.0
    }
}

impl From<SimilarityValue> for f64 {
    fn from(v: SimilarityValue) -> f64 {
        v.0
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// `exp(-((a - b) / sigma)^2)`.
pub fn gaussian_term(a: f64, b: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let z = (a - b) / sigma;
    Ok((-(z * z)).exp())
}

/// Indices of calls active in at least one of the two vectors.
pub fn active_union(a: &[f64], b: &[f64]) -> Result<Vec<usize>> {
    check_lengths(a, b)?;
    Ok(a
        .iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (&x, &y))| x > 0.0 || y > 0.0)
        .map(|(s, _)| s)
        .collect())
}

pub fn pair_similarity(a: &ProcessVector, b: &ProcessVector, measure: &Idsim) -> Result<SimilarityValue> {
    measure.similarity(a.values(), b.values())
}

/// `1 - pair_similarity`, in `[0, 0.5]`.
pub fn distance(a: &ProcessVector, b: &ProcessVector, measure: &Idsim) -> Result<f64> {
    measure.distance(a.values(), b.values())
}
