//! Constructors for the two reference scenarios and their target
//! distributions: perfectly correlated no-input outputs, and the
//! matching-inputs distribution with its XOR parity strategy.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::netmodel::{
    ConditionalDistribution, NetError, NetworkSpec, PartySpec, SourceSpec, ValidatedNetwork,
};
use crate::pmf::FinitePmf;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// `h` parties share one source distributed as `q` over its support; each
/// party outputs the received value. The target puts weight `q(a)` on every
/// all-equal output tuple and zero elsewhere (single dummy input).
///
/// Returns the network together with its target distribution; evaluating the
/// network reproduces the target exactly.
pub fn build_correlated_no_input(
    h: usize,
    q: &FinitePmf,
) -> Result<(ValidatedNetwork, ConditionalDistribution), ScenarioError> {
    if h < 2 {
        return Err(ScenarioError::InvalidParams(format!(
            "need at least 2 parties, got {h}"
        )));
    }
    let (source_pmf, support_values) = q.restricted_to_support();
    let k = q.len();
    let party = |i: usize| PartySpec {
        name: format!("party{i}"),
        input_size: 1,
        output_size: k,
        strategy: vec![support_values
            .iter()
            .map(|&value| FinitePmf::point_mass(k, value))
            .collect()],
    };
    let net = ValidatedNetwork::new(NetworkSpec::Structured {
        parties: (0..h).map(party).collect(),
        sources: vec![SourceSpec {
            id: "r".into(),
            pmf: source_pmf,
            visible_to: (0..h).collect::<BTreeSet<_>>(),
        }],
    })?;

    let output_size = k.pow(h as u32);
    let mut row = vec![0.0; output_size];
    for (value, weight) in q.support() {
        // All-equal tuple (value, ..., value) in mixed radix base k.
        let mut index = 0usize;
        for _ in 0..h {
            index = index * k + value;
        }
        row[index] = weight;
    }
    let target = ConditionalDistribution::from_raw_rows(vec![row])?;
    Ok((net, target))
}

/// The matching-inputs target over inputs `(x1, x2)` and bit outputs:
/// equal bits with probability 1/2 each when the inputs match, uniform over
/// all four output pairs otherwise.
pub fn target_matching_distribution(x_size: usize) -> ConditionalDistribution {
    assert!(x_size >= 1);
    let mut rows = Vec::with_capacity(x_size * x_size);
    for x1 in 0..x_size {
        for x2 in 0..x_size {
            // Outputs ordered (a1, a2): 00, 01, 10, 11.
            let row = if x1 == x2 {
                vec![0.5, 0.0, 0.0, 0.5]
            } else {
                vec![0.25; 4]
            };
            rows.push(row);
        }
    }
    ConditionalDistribution::from_raw_rows(rows).expect("rows are valid PMFs")
}

/// Number of shared bits the XOR strategy needs: `ceil(log2(x_size + 1))`.
pub fn xor_bit_count(x_size: usize) -> u32 {
    usize::BITS - x_size.leading_zeros()
}

/// The XOR parity strategy for the matching-inputs target.
///
/// One source of `k = ceil(log2(x_size+1))` uniform shared bits (cardinality
/// `2^k`). Input `x` is mapped to the `(x+1)`-th nonempty subset of the bits
/// in ascending characteristic-vector order, i.e. bit mask `x + 1`; both
/// parties output the parity of the masked bits. The evaluation equals
/// [`target_matching_distribution`] exactly.
pub fn xor_strategy_network(x_size: usize) -> Result<ValidatedNetwork, ScenarioError> {
    if x_size == 0 {
        return Err(ScenarioError::InvalidParams("x_size must be >= 1".into()));
    }
    let k = xor_bit_count(x_size);
    let cardinality = 1usize << k;
    let strategy: Vec<Vec<FinitePmf>> = (0..x_size)
        .map(|x| {
            let mask = x + 1;
            (0..cardinality)
                .map(|r| FinitePmf::point_mass(2, (r & mask).count_ones() as usize % 2))
                .collect()
        })
        .collect();
    let party = |name: &str| PartySpec {
        name: name.into(),
        input_size: x_size,
        output_size: 2,
        strategy: strategy.clone(),
    };
    Ok(ValidatedNetwork::new(NetworkSpec::Structured {
        parties: vec![party("alice"), party("bob")],
        sources: vec![SourceSpec {
            id: "bits".into(),
            pmf: FinitePmf::uniform(cardinality),
            visible_to: BTreeSet::from([0, 1]),
        }],
    })?)
}
