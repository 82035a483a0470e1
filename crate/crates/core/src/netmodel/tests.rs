use std::collections::BTreeSet;

use super::*;
use crate::pmf::FinitePmf;

pub(crate) fn set(parties: &[usize]) -> BTreeSet<usize> {
    parties.iter().copied().collect()
}

/// Two parties, no inputs, one shared source; both output the source value.
fn correlated_bell(pmf: FinitePmf) -> ValidatedNetwork {
    let k = pmf.len();
    let party = |name: &str| PartySpec {
        name: name.into(),
        input_size: 1,
        output_size: k,
        strategy: vec![(0..k).map(|r| FinitePmf::point_mass(k, r)).collect()],
    };
    ValidatedNetwork::new(NetworkSpec::Structured {
        parties: vec![party("alice"), party("bob")],
        sources: vec![SourceSpec {
            id: "r".into(),
            pmf,
            visible_to: set(&[0, 1]),
        }],
    })
    .unwrap()
}

#[test]
fn validates_wellformed_bell() {
    let net = correlated_bell(FinitePmf::uniform(2));
    assert_eq!(net.input_size(), 1);
    assert_eq!(net.output_size(), 4);
    assert_eq!(net.sources().len(), 1);
}

#[test]
fn rejects_empty_visibility() {
    let err = ValidatedNetwork::new(NetworkSpec::Structured {
        parties: vec![PartySpec {
            name: "a".into(),
            input_size: 1,
            output_size: 1,
            strategy: vec![vec![FinitePmf::uniform(1)]],
        }],
        sources: vec![SourceSpec {
            id: "r".into(),
            pmf: FinitePmf::uniform(2),
            visible_to: BTreeSet::new(),
        }],
    })
    .unwrap_err();
    assert!(matches!(err, NetError::Structure(_)));
}

#[test]
fn rejects_dangling_party_reference() {
    let err = ValidatedNetwork::new(NetworkSpec::Structured {
        parties: vec![PartySpec {
            name: "a".into(),
            input_size: 1,
            output_size: 1,
            strategy: vec![vec![FinitePmf::uniform(1); 2]],
        }],
        sources: vec![SourceSpec {
            id: "r".into(),
            pmf: FinitePmf::uniform(2),
            visible_to: set(&[0, 3]),
        }],
    })
    .unwrap_err();
    assert!(matches!(err, NetError::Structure(_)));
}

#[test]
fn rejects_incomplete_strategy_table() {
    let err = ValidatedNetwork::new(NetworkSpec::Structured {
        parties: vec![PartySpec {
            name: "a".into(),
            input_size: 2,
            output_size: 2,
            strategy: vec![vec![FinitePmf::uniform(2); 2]], // one input missing
        }],
        sources: vec![SourceSpec {
            id: "r".into(),
            pmf: FinitePmf::uniform(2),
            visible_to: set(&[0]),
        }],
    })
    .unwrap_err();
    assert!(matches!(err, NetError::Structure(_)));
}

#[test]
fn deterministic_constant_strategies() {
    // Both parties always output 0, with inputs present.
    let party = |name: &str| PartySpec {
        name: name.into(),
        input_size: 2,
        output_size: 2,
        strategy: vec![vec![FinitePmf::point_mass(2, 0); 2]; 2],
    };
    let net = ValidatedNetwork::new(NetworkSpec::Structured {
        parties: vec![party("alice"), party("bob")],
        sources: vec![SourceSpec {
            id: "r".into(),
            pmf: FinitePmf::uniform(2),
            visible_to: set(&[0, 1]),
        }],
    })
    .unwrap();
    let p = net.evaluate().unwrap();
    for x in 0..4 {
        assert_eq!(p.prob(x, 0), 1.0);
    }
}

#[test]
fn maximally_correlated_coin() {
    let p = correlated_bell(FinitePmf::uniform(2)).evaluate().unwrap();
    // Joint outputs (a1, a2): 00, 01, 10, 11.
    assert_eq!(p.prob(0, 0), 0.5);
    assert_eq!(p.prob(0, 1), 0.0);
    assert_eq!(p.prob(0, 2), 0.0);
    assert_eq!(p.prob(0, 3), 0.5);
}

#[test]
fn evaluation_cap_is_enforced() {
    let net = correlated_bell(FinitePmf::uniform(4));
    let err = net.evaluate_with_cap(10).unwrap_err();
    assert!(matches!(err, NetError::EnumerationCapExceeded { .. }));
}

#[test]
fn infinity_distance_basics() {
    let rows = |v: Vec<Vec<f64>>| ConditionalDistribution::from_raw_rows(v).unwrap();
    let p = rows(vec![vec![1.0, 0.0]]);
    let q = rows(vec![vec![0.0, 1.0]]);
    assert_eq!(p.infinity_distance(&p).unwrap(), 0.0);
    assert_eq!(p.infinity_distance(&q).unwrap(), 1.0);
    let r = rows(vec![vec![0.5, 0.5]]);
    let s = rows(vec![vec![0.25, 0.75]]);
    assert_eq!(r.infinity_distance(&s).unwrap(), 0.25);
}

#[test]
fn infinity_distance_shape_mismatch() {
    let p = ConditionalDistribution::from_raw_rows(vec![vec![1.0, 0.0]]).unwrap();
    let q = ConditionalDistribution::from_raw_rows(vec![vec![1.0]]).unwrap();
    assert!(matches!(
        p.infinity_distance(&q),
        Err(NetError::ShapeMismatch(_))
    ));
}

#[test]
fn structured_matches_expanded_blackbox() {
    let net = correlated_bell(FinitePmf::new(vec![0.3, 0.7]).unwrap());
    let blackbox = expand_to_blackbox(&net, DEFAULT_ENUM_CAP).unwrap();
    let d = net
        .evaluate()
        .unwrap()
        .infinity_distance(&blackbox.evaluate().unwrap())
        .unwrap();
    assert!(d <= 1e-12, "distance {d}");
}

#[test]
fn compose_with_trivial_network_is_identity() {
    let trivial = ValidatedNetwork::new(NetworkSpec::Structured {
        parties: vec![PartySpec {
            name: "t".into(),
            input_size: 1,
            output_size: 1,
            strategy: vec![vec![FinitePmf::uniform(1)]],
        }],
        sources: vec![SourceSpec {
            id: "s".into(),
            pmf: FinitePmf::uniform(1),
            visible_to: set(&[0]),
        }],
    })
    .unwrap();
    let net = correlated_bell(FinitePmf::uniform(2));
    let composed = product_compose(&net, &trivial).unwrap();
    let p = net.evaluate().unwrap();
    let q = composed.evaluate().unwrap();
    assert_eq!(p.input_size(), q.input_size());
    assert_eq!(p.output_size(), q.output_size());
    assert!(p.infinity_distance(&q).unwrap() <= 1e-12);
}

#[test]
fn two_fair_coins_compose_to_uniform() {
    let coin = || {
        ValidatedNetwork::new(NetworkSpec::Structured {
            parties: vec![PartySpec {
                name: "p".into(),
                input_size: 1,
                output_size: 2,
                strategy: vec![vec![FinitePmf::point_mass(2, 0), FinitePmf::point_mass(2, 1)]],
            }],
            sources: vec![SourceSpec {
                id: "c".into(),
                pmf: FinitePmf::uniform(2),
                visible_to: set(&[0]),
            }],
        })
        .unwrap()
    };
    let composed = product_compose(&coin(), &coin()).unwrap();
    let p = composed.evaluate().unwrap();
    for a in 0..4 {
        assert!((p.prob(0, a) - 0.25).abs() <= 1e-12);
    }
}

#[test]
fn compose_renames_colliding_ids() {
    let net = correlated_bell(FinitePmf::uniform(2));
    let composed = product_compose(&net, &net).unwrap();
    let ids: Vec<&str> = composed.sources().iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids, vec!["a.r", "b.r"]);
    let p = net.evaluate().unwrap();
    let q = composed.evaluate().unwrap();
    assert!(q.infinity_distance(&p.outer_product(&p)).unwrap() <= 1e-12);
}

#[test]
fn blackbox_compose_matches_outer_product() {
    let n1 = expand_to_blackbox(
        &correlated_bell(FinitePmf::new(vec![0.2, 0.8]).unwrap()),
        DEFAULT_ENUM_CAP,
    )
    .unwrap();
    let n2 = correlated_bell(FinitePmf::uniform(2));
    let composed = product_compose(&n1, &n2).unwrap();
    let expected = n1
        .evaluate()
        .unwrap()
        .outer_product(&n2.evaluate().unwrap());
    assert!(composed
        .evaluate()
        .unwrap()
        .infinity_distance(&expected)
        .unwrap()
        <= 1e-12);
}

#[test]
fn with_source_pmf_replaces_weights() {
    let net = correlated_bell(FinitePmf::uniform(2));
    let skewed = net
        .with_source_pmf("r", FinitePmf::new(vec![0.9, 0.1]).unwrap())
        .unwrap();
    let p = skewed.evaluate().unwrap();
    assert!((p.prob(0, 0) - 0.9).abs() <= 1e-12);
    assert!(matches!(
        net.with_source_pmf("nope", FinitePmf::uniform(2)),
        Err(NetError::SourceNotFound(_))
    ));
    assert!(matches!(
        net.with_source_pmf("r", FinitePmf::uniform(3)),
        Err(NetError::ShapeMismatch(_))
    ));
}
