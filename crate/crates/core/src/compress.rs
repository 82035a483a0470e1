//! Randomness compression by empirical resampling.
//!
//! A source is replaced by the empirical distribution of `n` i.i.d. draws
//! from it. Existence of a good sampling is probabilistic, so the procedure
//! retries with derived seeds until the infinity-norm deviation target is
//! met or the attempt budget runs out; failure surfaces the best deviation
//! seen. All randomness flows through [`crate::rng`]; attempt `t` of master
//! seed `s` uses `derive_seed(s, t)`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{multi_source_bound, DeltaSplit};
use crate::netmodel::{ConditionalDistribution, NetError, SourceSpec, ValidatedNetwork};
use crate::pmf::FinitePmf;
use crate::rng;

#[derive(Debug, Error)]
pub enum CompressError {
    #[error("source not found: {0}")]
    SourceNotFound(String),
    #[error(
        "attempts exhausted for source '{source_id}': best deviation {best_deviation} \
         after {attempts} attempts (epsilon {epsilon})"
    )]
    AttemptsExhausted {
        source_id: String,
        best_deviation: f64,
        attempts: u64,
        epsilon: f64,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Parameters for compressing one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionConfig {
    /// Infinity-norm deviation target, > 0.
    pub epsilon: f64,
    /// Samples per attempt.
    pub n: u64,
    pub max_attempts: u64,
    pub seed: u64,
}

impl CompressionConfig {
    fn check(&self) -> Result<(), CompressError> {
        if self.epsilon <= 0.0 || self.epsilon.is_nan() {
            return Err(CompressError::InvalidConfig("epsilon must be > 0".into()));
        }
        if self.n == 0 {
            return Err(CompressError::InvalidConfig("n must be >= 1".into()));
        }
        if self.max_attempts == 0 {
            return Err(CompressError::InvalidConfig(
                "max_attempts must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome record for one compressed source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub source_id: String,
    pub attempts_used: u64,
    pub achieved_deviation: f64,
    pub result_cardinality: usize,
    pub seed_used: u64,
    /// True when `n` was at least the source's support size, so the source
    /// was left untouched.
    pub skipped: bool,
}

/// Empirical source: `n` i.i.d. draws from `source.pmf`, each value weighted
/// by its occurrence count over `n`. The alphabet is unchanged; unsampled
/// values get weight zero, so the support shrinks to the sampled values.
pub fn sample_empirical(source: &SourceSpec, n: u64, seed: u64) -> SourceSpec {
    assert!(n >= 1);
    let mut generator = rng::stream(seed);
    let cumulative: Vec<f64> = source
        .pmf
        .probs()
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let mut counts = vec![0u64; source.pmf.len()];
    let last_support = source
        .pmf
        .support()
        .last()
        .map(|(i, _)| i)
        .expect("valid PMF has support");
    for _ in 0..n {
        let u: f64 = generator.random();
        // Inverse CDF by binary search; rounding dust past the last
        // cumulative value falls into the last supported bucket.
        let value = cumulative.partition_point(|&c| c <= u).min(last_support);
        counts[value] += 1;
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    SourceSpec {
        id: source.id.clone(),
        pmf: FinitePmf::new(probs).expect("empirical counts normalize"),
        visible_to: source.visible_to.clone(),
    }
}

/// Retry loop for one source against a fixed baseline distribution.
fn compress_against_baseline(
    net: &ValidatedNetwork,
    baseline: &ConditionalDistribution,
    source_id: &str,
    cfg: &CompressionConfig,
) -> Result<(ValidatedNetwork, CompressionReport), CompressError> {
    let source = net
        .source(source_id)
        .ok_or_else(|| CompressError::SourceNotFound(source_id.to_string()))?
        .clone();
    let mut best_deviation = f64::INFINITY;
    for attempt in 1..=cfg.max_attempts {
        let attempt_seed = rng::derive_seed(cfg.seed, attempt);
        let empirical = sample_empirical(&source, cfg.n, attempt_seed);
        let candidate = net.with_source_pmf(source_id, empirical.pmf.clone())?;
        let deviation = candidate.evaluate()?.infinity_distance(baseline)?;
        if deviation < cfg.epsilon {
            return Ok((
                candidate,
                CompressionReport {
                    source_id: source_id.to_string(),
                    attempts_used: attempt,
                    achieved_deviation: deviation,
                    result_cardinality: empirical.pmf.support_size(),
                    seed_used: attempt_seed,
                    skipped: false,
                },
            ));
        }
        best_deviation = best_deviation.min(deviation);
    }
    Err(CompressError::AttemptsExhausted {
        source_id: source_id.to_string(),
        best_deviation,
        attempts: cfg.max_attempts,
        epsilon: cfg.epsilon,
    })
}

/// Replaces `source_id` with an empirical source of support at most `cfg.n`,
/// retrying until `infinity_distance` to the original distribution is below
/// `cfg.epsilon`. When `n` already covers the support, the network is
/// returned unchanged with `skipped = true`.
pub fn compress_single(
    net: &ValidatedNetwork,
    source_id: &str,
    cfg: &CompressionConfig,
) -> Result<(ValidatedNetwork, CompressionReport), CompressError> {
    cfg.check()?;
    let source = net
        .source(source_id)
        .ok_or_else(|| CompressError::SourceNotFound(source_id.to_string()))?;
    // Compression that cannot shrink the source leaves it untouched, and the
    // baseline never needs evaluating.
    if cfg.n as u128 >= source.pmf.support_size() as u128 {
        let report = CompressionReport {
            source_id: source_id.to_string(),
            attempts_used: 0,
            achieved_deviation: 0.0,
            result_cardinality: source.pmf.support_size(),
            seed_used: cfg.seed,
            skipped: true,
        };
        return Ok((net.clone(), report));
    }
    let baseline = net.evaluate()?;
    compress_against_baseline(net, &baseline, source_id, cfg)
}

/// Sequential multi-source compression with a delta split.
///
/// Stage `i` compresses `source_ids[i]` to tolerance `epsilon * deltas[i]`
/// against the *previous* stage's distribution, so the total deviation from
/// the original is below `epsilon` by the triangle inequality. Stage sample
/// counts default to [`multi_source_bound`]; pass `ns` to override.
#[allow(clippy::too_many_arguments)]
pub fn compress_many(
    net: &ValidatedNetwork,
    source_ids: &[String],
    epsilon: f64,
    split: &DeltaSplit,
    ns: Option<&[u64]>,
    seed: u64,
    max_attempts: u64,
) -> Result<(ValidatedNetwork, Vec<CompressionReport>), CompressError> {
    if source_ids.len() != split.len() {
        return Err(CompressError::InvalidConfig(format!(
            "{} source ids but {} deltas",
            source_ids.len(),
            split.len()
        )));
    }
    if let Some(ns) = ns {
        if ns.len() != source_ids.len() {
            return Err(CompressError::InvalidConfig(format!(
                "{} source ids but {} sample counts",
                source_ids.len(),
                ns.len()
            )));
        }
    }
    for (i, id) in source_ids.iter().enumerate() {
        if net.source(id).is_none() {
            return Err(CompressError::SourceNotFound(id.clone()));
        }
        if source_ids[..i].contains(id) {
            return Err(CompressError::InvalidConfig(format!(
                "duplicate source id '{id}'"
            )));
        }
    }
    let default_ns = match ns {
        Some(_) => None,
        None => Some(
            multi_source_bound(net.input_size() as u64, net.output_size() as u64, epsilon, split)
                .map_err(|e| CompressError::InvalidConfig(e.to_string()))?,
        ),
    };
    let ns = ns.unwrap_or_else(|| default_ns.as_deref().unwrap());

    let mut current = net.clone();
    let mut reports = Vec::with_capacity(source_ids.len());
    for (stage, ((id, &delta), &n)) in source_ids
        .iter()
        .zip(split.deltas())
        .zip(ns)
        .enumerate()
    {
        let cfg = CompressionConfig {
            epsilon: epsilon * delta,
            n,
            max_attempts,
            seed: rng::derive_seed(seed, stage as u64),
        };
        let (next, report) = compress_single(&current, id, &cfg)?;
        current = next;
        reports.push(report);
    }
    Ok((current, reports))
}

/// Fraction of `trials` single-attempt compressions whose deviation from the
/// original distribution is below `epsilon`. Trial `t` uses the derived seed
/// `derive_seed(seed, t)`. No skip short-circuit: the sampling is always
/// performed, so this estimates the per-attempt success probability that the
/// retry loop relies on.
pub fn estimate_success_probability(
    net: &ValidatedNetwork,
    source_id: &str,
    n: u64,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> Result<f64, CompressError> {
    if trials == 0 {
        return Err(CompressError::InvalidConfig("trials must be >= 1".into()));
    }
    if n == 0 {
        return Err(CompressError::InvalidConfig("n must be >= 1".into()));
    }
    let source = net
        .source(source_id)
        .ok_or_else(|| CompressError::SourceNotFound(source_id.to_string()))?
        .clone();
    let baseline = net.evaluate()?;
    let mut successes = 0u64;
    for trial in 0..trials {
        let empirical = sample_empirical(&source, n, rng::derive_seed(seed, trial));
        let candidate = net.with_source_pmf(source_id, empirical.pmf)?;
        let deviation = candidate.evaluate()?.infinity_distance(&baseline)?;
        if deviation < epsilon {
            successes += 1;
        }
    }
    Ok(successes as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::netmodel::{NetworkSpec, PartySpec};

    fn parties(h: usize, k: usize) -> Vec<PartySpec> {
        (0..h)
            .map(|i| PartySpec {
                name: format!("p{i}"),
                input_size: 1,
                output_size: k,
                strategy: vec![(0..k).map(|r| FinitePmf::point_mass(k, r)).collect()],
            })
            .collect()
    }

    /// h parties sharing one source; each outputs the source value.
    fn correlated(h: usize, pmf: FinitePmf) -> ValidatedNetwork {
        let k = pmf.len();
        ValidatedNetwork::new(NetworkSpec::Structured {
            parties: parties(h, k),
            sources: vec![SourceSpec {
                id: "r".into(),
                pmf,
                visible_to: (0..h).collect::<BTreeSet<_>>(),
            }],
        })
        .unwrap()
    }

    #[test]
    fn empirical_point_mass_is_identity() {
        let source = SourceSpec {
            id: "r".into(),
            pmf: FinitePmf::point_mass(5, 2),
            visible_to: BTreeSet::from([0]),
        };
        for n in [1, 3, 10] {
            let q = sample_empirical(&source, n, 99);
            assert_eq!(q.pmf, source.pmf);
        }
    }

    #[test]
    fn empirical_single_sample_is_point_mass() {
        let source = SourceSpec {
            id: "r".into(),
            pmf: FinitePmf::uniform(10),
            visible_to: BTreeSet::from([0]),
        };
        let q = sample_empirical(&source, 1, 7);
        assert_eq!(q.pmf.support_size(), 1);
        assert_eq!(q.pmf.support().next().unwrap().1, 1.0);
    }

    #[test]
    fn empirical_weights_are_count_multiples() {
        let source = SourceSpec {
            id: "r".into(),
            pmf: FinitePmf::uniform(1000),
            visible_to: BTreeSet::from([0]),
        };
        let q = sample_empirical(&source, 100, 42);
        assert!(q.pmf.support_size() <= 100);
        for (_, w) in q.pmf.support() {
            let scaled = w * 100.0;
            assert!((scaled - scaled.round()).abs() < 1e-9, "weight {w}");
        }
        // Deterministic given the same seed.
        assert_eq!(q.pmf, sample_empirical(&source, 100, 42).pmf);
        assert_ne!(q.pmf, sample_empirical(&source, 100, 43).pmf);
    }

    #[test]
    fn skip_when_n_covers_support() {
        let net = correlated(2, FinitePmf::uniform(2));
        let cfg = CompressionConfig {
            epsilon: 0.1,
            n: 5,
            max_attempts: 10,
            seed: 1,
        };
        let (out, report) = compress_single(&net, "r", &cfg).unwrap();
        assert!(report.skipped);
        assert_eq!(report.achieved_deviation, 0.0);
        assert_eq!(report.attempts_used, 0);
        assert_eq!(out.spec(), net.spec());
    }

    #[test]
    fn loose_epsilon_succeeds_first_attempt() {
        let net = correlated(2, FinitePmf::uniform(16));
        let cfg = CompressionConfig {
            epsilon: 1.1,
            n: 4,
            max_attempts: 1,
            seed: 5,
        };
        let (_, report) = compress_single(&net, "r", &cfg).unwrap();
        assert!(!report.skipped);
        assert_eq!(report.attempts_used, 1);
        assert!(report.achieved_deviation <= 1.0);
        assert!(report.result_cardinality <= 4);
    }

    #[test]
    fn unknown_source_is_an_error() {
        let net = correlated(2, FinitePmf::uniform(4));
        let cfg = CompressionConfig {
            epsilon: 0.5,
            n: 2,
            max_attempts: 1,
            seed: 0,
        };
        assert!(matches!(
            compress_single(&net, "nope", &cfg),
            Err(CompressError::SourceNotFound(_))
        ));
    }

    #[test]
    fn exhaustion_carries_best_deviation() {
        // One sample from a uniform source over 16 values cannot get close.
        let net = correlated(2, FinitePmf::uniform(16));
        let cfg = CompressionConfig {
            epsilon: 1e-6,
            n: 1,
            max_attempts: 3,
            seed: 11,
        };
        match compress_single(&net, "r", &cfg) {
            Err(CompressError::AttemptsExhausted {
                best_deviation,
                attempts,
                ..
            }) => {
                assert_eq!(attempts, 3);
                assert!(best_deviation > 0.5);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn compression_is_deterministic() {
        let net = correlated(2, FinitePmf::uniform(32));
        let cfg = CompressionConfig {
            epsilon: 0.4,
            n: 16,
            max_attempts: 50,
            seed: 42,
        };
        let (a_net, a) = compress_single(&net, "r", &cfg).unwrap();
        let (b_net, b) = compress_single(&net, "r", &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a_net.spec(), b_net.spec());
    }

    #[test]
    fn singleton_split_matches_compress_single() {
        let net = correlated(2, FinitePmf::uniform(32));
        let epsilon = 0.4;
        let ids = vec!["r".to_string()];
        let (many_net, reports) = compress_many(
            &net,
            &ids,
            epsilon,
            &DeltaSplit::equal(1),
            Some(&[16]),
            77,
            50,
        )
        .unwrap();
        let cfg = CompressionConfig {
            epsilon,
            n: 16,
            max_attempts: 50,
            seed: rng::derive_seed(77, 0),
        };
        let (single_net, single_report) = compress_single(&net, "r", &cfg).unwrap();
        assert_eq!(reports[0], single_report);
        assert_eq!(many_net.spec(), single_net.spec());
    }

    #[test]
    fn point_mass_sources_both_skip() {
        // Both parties see both 4-value sources: 16 source tuples each.
        let strategy = vec![(0..16)
            .map(|t| FinitePmf::point_mass(2, t % 2))
            .collect::<Vec<_>>()];
        let net = ValidatedNetwork::new(NetworkSpec::Structured {
            parties: (0..2)
                .map(|i| PartySpec {
                    name: format!("p{i}"),
                    input_size: 1,
                    output_size: 2,
                    strategy: strategy.clone(),
                })
                .collect(),
            sources: vec![
                SourceSpec {
                    id: "r1".into(),
                    pmf: FinitePmf::point_mass(4, 0),
                    visible_to: BTreeSet::from([0, 1]),
                },
                SourceSpec {
                    id: "r2".into(),
                    pmf: FinitePmf::point_mass(4, 3),
                    visible_to: BTreeSet::from([0, 1]),
                },
            ],
        })
        .unwrap();
        let ids = vec!["r1".to_string(), "r2".to_string()];
        let (_, reports) = compress_many(
            &net,
            &ids,
            0.3,
            &DeltaSplit::new(vec![0.5, 0.5]).unwrap(),
            Some(&[2, 2]),
            3,
            5,
        )
        .unwrap();
        assert!(reports.iter().all(|r| r.skipped));
        assert!(reports.iter().all(|r| r.achieved_deviation == 0.0));
    }

    #[test]
    fn success_probability_trivial_cases() {
        let net = correlated(2, FinitePmf::uniform(8));
        // Deviations never exceed 1.
        let p = estimate_success_probability(&net, "r", 2, 1.1, 20, 9).unwrap();
        assert_eq!(p, 1.0);

        let point = correlated(2, FinitePmf::point_mass(8, 1));
        let p = estimate_success_probability(&point, "r", 2, 1e-9, 20, 9).unwrap();
        assert_eq!(p, 1.0);
    }
}
