//! Probability mass functions over finite indexed alphabets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the total mass of a PMF supplied as input.
pub const PROB_TOL: f64 = 1e-9;
/// Tolerance used for internal equality checks on probabilities.
pub const EQ_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PmfError {
    #[error("PMF weights sum to {sum} (must be 1 within {PROB_TOL})")]
    Normalization { sum: f64 },
    #[error("PMF weight at index {index} is negative ({weight})")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("PMF must have at least one weight")]
    Empty,
}

/// A probability mass function over the alphabet `0..len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FinitePmf {
    probs: Vec<f64>,
}

impl FinitePmf {
    pub fn new(probs: Vec<f64>) -> Result<Self, PmfError> {
        if probs.is_empty() {
            return Err(PmfError::Empty);
        }
        for (index, &weight) in probs.iter().enumerate() {
            if weight < 0.0 || !weight.is_finite() {
                return Err(PmfError::NegativeWeight { index, weight });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(PmfError::Normalization { sum });
        }
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        assert!(at < len);
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Indices carrying nonzero weight, with their weights.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, w)| w > 0.0)
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&w| w > 0.0).count()
    }

    /// Restricts the PMF to its support, returning the kept indices.
    pub fn restricted_to_support(&self) -> (Self, Vec<usize>) {
        let (indices, probs): (Vec<usize>, Vec<f64>) = self.support().unzip();
        (Self { probs }, indices)
    }
}

impl TryFrom<Vec<f64>> for FinitePmf {
    type Error = PmfError;

    fn try_from(probs: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(probs)
    }
}

impl From<FinitePmf> for Vec<f64> {
    fn from(pmf: FinitePmf) -> Self {
        pmf.probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_pmf() {
        let pmf = FinitePmf::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(pmf.len(), 2);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(
            FinitePmf::new(vec![0.5, 0.6]),
            Err(PmfError::Normalization { .. })
        ));
    }

    #[test]
    fn rejects_negative_weight() {
        assert!(matches!(
            FinitePmf::new(vec![1.5, -0.5]),
            Err(PmfError::NegativeWeight { index: 1, .. })
        ));
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(FinitePmf::new(vec![]), Err(PmfError::Empty)));
    }

    #[test]
    fn support_skips_zeros() {
        let pmf = FinitePmf::new(vec![0.5, 0.0, 0.5]).unwrap();
        let support: Vec<usize> = pmf.support().map(|(i, _)| i).collect();
        assert_eq!(support, vec![0, 2]);
        assert_eq!(pmf.support_size(), 2);
    }

    #[test]
    fn restriction_keeps_weights() {
        let pmf = FinitePmf::new(vec![0.5, 0.0, 0.5]).unwrap();
        let (restricted, kept) = pmf.restricted_to_support();
        assert_eq!(kept, vec![0, 2]);
        assert_eq!(restricted.probs(), &[0.5, 0.5]);
    }
}
