//! Data model for shared-randomness networks and exact evaluation of their
//! outcome distributions.
//!
//! A network is either *structured* (explicit parties with local strategy
//! tables) or a *blackbox* (a single conditional kernel over the joint input
//! and the full source tuple). Source tuples are ordered by a fixed contract:
//! sources sorted lexicographically by id, first sorted source most
//! significant in the mixed-radix index. Joint inputs and outputs use the
//! same convention over parties, first party most significant.

pub mod format;
pub mod radix;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::pmf::{FinitePmf, PmfError, EQ_TOL, PROB_TOL};

/// Default cap on `|R| * |X| * |A|` enumeration cells for exact evaluation.
pub const DEFAULT_ENUM_CAP: u128 = 100_000_000;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("normalization error: {0}")]
    Normalization(#[from] PmfError),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("enumeration cap exceeded: {cells} cells > cap {cap}")]
    EnumerationCapExceeded { cells: u128, cap: u128 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("source not found: {0}")]
    SourceNotFound(String),
}

/// A named randomness source and the parties that see its value.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub id: String,
    pub pmf: FinitePmf,
    pub visible_to: BTreeSet<usize>,
}

/// One party: alphabet sizes and a strategy table.
///
/// `strategy[x][t]` is the output PMF for own input `x` and mixed-radix index
/// `t` over the tuple of visible source values (visible sources in sorted-id
/// order, first most significant). Private randomness, if any, is already
/// folded into the PMF rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PartySpec {
    pub name: String,
    pub input_size: usize,
    pub output_size: usize,
    pub strategy: Vec<Vec<FinitePmf>>,
}

/// A network, in structured or blackbox form.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSpec {
    Structured {
        parties: Vec<PartySpec>,
        sources: Vec<SourceSpec>,
    },
    /// `kernel[x][r]` is the joint-output PMF for joint input `x` and full
    /// source tuple index `r` (all sources, sorted by id, first most
    /// significant). Internals of the box (communication, entanglement, ...)
    /// are not modeled; only the induced kernel is.
    Blackbox {
        input_size: usize,
        output_size: usize,
        sources: Vec<SourceSpec>,
        kernel: Vec<Vec<FinitePmf>>,
    },
}

/// A network whose invariants have been checked and whose source ordering is
/// frozen. Immutable; safe to share read-only across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedNetwork {
    spec: NetworkSpec,
    input_size: usize,
    output_size: usize,
}

/// Dense table `p(a|x)`: one output PMF row per joint input.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    rows: Vec<FinitePmf>,
}

impl ConditionalDistribution {
    pub fn from_rows(rows: Vec<FinitePmf>) -> Result<Self, NetError> {
        if rows.is_empty() {
            return Err(NetError::Structure("distribution has no rows".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(NetError::ShapeMismatch("ragged rows".into()));
        }
        Ok(Self { rows })
    }

    pub fn from_raw_rows(rows: Vec<Vec<f64>>) -> Result<Self, NetError> {
        let rows = rows
            .into_iter()
            .map(FinitePmf::new)
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(rows)
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[FinitePmf] {
        &self.rows
    }

    pub fn prob(&self, x: usize, a: usize) -> f64 {
        self.rows[x].probs()[a]
    }

    /// Max over `(a, x)` of the absolute probability gap.
    pub fn infinity_distance(&self, other: &Self) -> Result<f64, NetError> {
        if self.input_size() != other.input_size() || self.output_size() != other.output_size() {
            return Err(NetError::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.input_size(),
                self.output_size(),
                other.input_size(),
                other.output_size()
            )));
        }
        let mut max = 0.0f64;
        for (p, q) in self.rows.iter().zip(&other.rows) {
            for (&pv, &qv) in p.probs().iter().zip(q.probs()) {
                max = max.max((pv - qv).abs());
            }
        }
        Ok(max)
    }

    /// Outer product: row `(x1,x2)`, column `(a1,a2)` with this table's
    /// indices most significant.
    pub fn outer_product(&self, other: &Self) -> Self {
        let mut rows = Vec::with_capacity(self.input_size() * other.input_size());
        for p in &self.rows {
            for q in &other.rows {
                let mut row = Vec::with_capacity(p.len() * q.len());
                for &pv in p.probs() {
                    for &qv in q.probs() {
                        row.push(pv * qv);
                    }
                }
                rows.push(FinitePmf::new(row).expect("product of PMF rows is a PMF"));
            }
        }
        Self { rows }
    }
}

impl ValidatedNetwork {
    /// Checks all invariants and freezes the source ordering.
    pub fn new(spec: NetworkSpec) -> Result<Self, NetError> {
        let spec = sort_and_check(spec)?;
        let (input_size, output_size) = joint_sizes(&spec)?;
        Ok(Self {
            spec,
            input_size,
            output_size,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn sources(&self) -> &[SourceSpec] {
        match &self.spec {
            NetworkSpec::Structured { sources, .. } => sources,
            NetworkSpec::Blackbox { sources, .. } => sources,
        }
    }

    pub fn source(&self, id: &str) -> Option<&SourceSpec> {
        self.sources().iter().find(|s| s.id == id)
    }

    /// Same network with one source's PMF replaced (same alphabet length).
    pub fn with_source_pmf(&self, id: &str, pmf: FinitePmf) -> Result<Self, NetError> {
        let original = self
            .source(id)
            .ok_or_else(|| NetError::SourceNotFound(id.into()))?;
        if original.pmf.len() != pmf.len() {
            return Err(NetError::ShapeMismatch(format!(
                "replacement PMF for source '{id}' has length {} (expected {})",
                pmf.len(),
                original.pmf.len()
            )));
        }
        let mut spec = self.spec.clone();
        let sources = match &mut spec {
            NetworkSpec::Structured { sources, .. } => sources,
            NetworkSpec::Blackbox { sources, .. } => sources,
        };
        sources.iter_mut().find(|s| s.id == id).unwrap().pmf = pmf;
        // Structure is unchanged; skip the full re-check.
        Ok(Self {
            spec,
            input_size: self.input_size,
            output_size: self.output_size,
        })
    }

    /// Cells the exact evaluation will touch: support sizes times `|X| |A|`.
    pub fn enumeration_cells(&self) -> u128 {
        let tuple_count: u128 = self
            .sources()
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.pmf.support_size() as u128));
        tuple_count
            .saturating_mul(self.input_size as u128)
            .saturating_mul(self.output_size as u128)
    }

    pub fn evaluate(&self) -> Result<ConditionalDistribution, NetError> {
        self.evaluate_with_cap(DEFAULT_ENUM_CAP)
    }

    /// Exact expectation over all source tuples:
    /// `p(a|x) = sum_r prod_i p(r_i) * kernel(a|x, r)`.
    pub fn evaluate_with_cap(&self, cap: u128) -> Result<ConditionalDistribution, NetError> {
        let cells = self.enumeration_cells();
        if cells > cap {
            return Err(NetError::EnumerationCapExceeded { cells, cap });
        }
        let mut rows = vec![vec![0.0f64; self.output_size]; self.input_size];
        match &self.spec {
            NetworkSpec::Structured { parties, sources } => {
                self.evaluate_structured(parties, sources, &mut rows);
            }
            NetworkSpec::Blackbox {
                sources, kernel, ..
            } => {
                evaluate_blackbox(sources, kernel, &mut rows);
            }
        }
        let rows = rows
            .into_iter()
            .map(|row| {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PROB_TOL {
                    return Err(NetError::Normalization(PmfError::Normalization { sum }));
                }
                // Tiny negative dust from accumulation is clamped.
                FinitePmf::new(
                    row.into_iter()
                        .map(|p| if p < 0.0 && p > -EQ_TOL { 0.0 } else { p })
                        .collect(),
                )
                .map_err(NetError::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        ConditionalDistribution::from_rows(rows)
    }

    fn evaluate_structured(
        &self,
        parties: &[PartySpec],
        sources: &[SourceSpec],
        rows: &mut [Vec<f64>],
    ) {
        let input_radices: Vec<usize> = parties.iter().map(|p| p.input_size).collect();
        let output_radices: Vec<usize> = parties.iter().map(|p| p.output_size).collect();
        // Visible source positions per party, in sorted-id order.
        let visible: Vec<Vec<usize>> = (0..parties.len())
            .map(|pi| {
                sources
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.visible_to.contains(&pi))
                    .map(|(si, _)| si)
                    .collect()
            })
            .collect();
        let visible_radices: Vec<Vec<usize>> = visible
            .iter()
            .map(|vis| vis.iter().map(|&si| sources[si].pmf.len()).collect())
            .collect();

        for_each_support_tuple(sources, |values, weight| {
            // Each party's strategy column for this source tuple.
            let columns: Vec<usize> = visible
                .iter()
                .zip(&visible_radices)
                .map(|(vis, radices)| {
                    let digits: Vec<usize> = vis.iter().map(|&si| values[si]).collect();
                    radix::compose(&digits, radices)
                })
                .collect();
            for (x, row) in rows.iter_mut().enumerate() {
                let inputs = radix::decompose(x, &input_radices);
                let party_rows: Vec<&[f64]> = parties
                    .iter()
                    .enumerate()
                    .map(|(pi, party)| party.strategy[inputs[pi]][columns[pi]].probs())
                    .collect();
                accumulate_product(row, &party_rows, &output_radices, weight);
            }
        });
    }
}

/// Accumulates `weight * prod_i party_rows[i][a_i]` into `row[a]` for every
/// joint output `a` (mixed radix over `output_radices`).
fn accumulate_product(row: &mut [f64], party_rows: &[&[f64]], output_radices: &[usize], weight: f64) {
    let mut digits = vec![0usize; output_radices.len()];
    for slot in row.iter_mut() {
        let mut p = weight;
        for (&d, party_row) in digits.iter().zip(party_rows) {
            p *= party_row[d];
        }
        *slot += p;
        // Increment the mixed-radix counter, last digit fastest.
        for i in (0..digits.len()).rev() {
            digits[i] += 1;
            if digits[i] < output_radices[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}

fn evaluate_blackbox(sources: &[SourceSpec], kernel: &[Vec<FinitePmf>], rows: &mut [Vec<f64>]) {
    let full_radices: Vec<usize> = sources.iter().map(|s| s.pmf.len()).collect();
    for_each_support_tuple(sources, |values, weight| {
        let r = radix::compose(values, &full_radices);
        for (x, row) in rows.iter_mut().enumerate() {
            for (slot, &p) in row.iter_mut().zip(kernel[x][r].probs()) {
                *slot += weight * p;
            }
        }
    });
}

/// Iterates the cartesian product of the sources' supports, first source most
/// significant. Calls `f(values, weight)` with full-alphabet value indices and
/// the product probability.
fn for_each_support_tuple(sources: &[SourceSpec], mut f: impl FnMut(&[usize], f64)) {
    let supports: Vec<Vec<(usize, f64)>> =
        sources.iter().map(|s| s.pmf.support().collect()).collect();
    if supports.iter().any(|s| s.is_empty()) {
        return; // unreachable for valid PMFs
    }
    let mut counters = vec![0usize; supports.len()];
    loop {
        let mut weight = 1.0;
        let values: Vec<usize> = counters
            .iter()
            .zip(&supports)
            .map(|(&c, support)| {
                let (value, w) = support[c];
                weight *= w;
                value
            })
            .collect();
        f(&values, weight);
        let mut i = supports.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            counters[i] += 1;
            if counters[i] < supports[i].len() {
                break;
            }
            counters[i] = 0;
        }
    }
}

fn sort_and_check(spec: NetworkSpec) -> Result<NetworkSpec, NetError> {
    match spec {
        NetworkSpec::Structured {
            parties,
            mut sources,
        } => {
            if parties.is_empty() {
                return Err(NetError::Structure("network has no parties".into()));
            }
            check_source_ids(&sources)?;
            sources.sort_by(|a, b| a.id.cmp(&b.id));
            for source in &sources {
                if source.visible_to.is_empty() {
                    return Err(NetError::Structure(format!(
                        "source '{}' has empty visibility",
                        source.id
                    )));
                }
                if let Some(&pi) = source.visible_to.iter().find(|&&pi| pi >= parties.len()) {
                    return Err(NetError::Structure(format!(
                        "source '{}' visible to nonexistent party {pi}",
                        source.id
                    )));
                }
            }
            for (pi, party) in parties.iter().enumerate() {
                if party.input_size == 0 || party.output_size == 0 {
                    return Err(NetError::Structure(format!(
                        "party '{}' has an empty alphabet",
                        party.name
                    )));
                }
                let tuple_count: usize = sources
                    .iter()
                    .filter(|s| s.visible_to.contains(&pi))
                    .map(|s| s.pmf.len())
                    .product();
                if party.strategy.len() != party.input_size {
                    return Err(NetError::Structure(format!(
                        "party '{}' strategy covers {} inputs (expected {})",
                        party.name,
                        party.strategy.len(),
                        party.input_size
                    )));
                }
                for per_input in &party.strategy {
                    if per_input.len() != tuple_count {
                        return Err(NetError::Structure(format!(
                            "party '{}' strategy covers {} source tuples (expected {tuple_count})",
                            party.name,
                            per_input.len()
                        )));
                    }
                    for pmf in per_input {
                        if pmf.len() != party.output_size {
                            return Err(NetError::Structure(format!(
                                "party '{}' strategy row has {} outputs (expected {})",
                                party.name,
                                pmf.len(),
                                party.output_size
                            )));
                        }
                    }
                }
            }
            Ok(NetworkSpec::Structured { parties, sources })
        }
        NetworkSpec::Blackbox {
            input_size,
            output_size,
            mut sources,
            kernel,
        } => {
            if input_size == 0 || output_size == 0 {
                return Err(NetError::Structure("blackbox has an empty alphabet".into()));
            }
            check_source_ids(&sources)?;
            sources.sort_by(|a, b| a.id.cmp(&b.id));
            let tuple_count: usize = sources.iter().map(|s| s.pmf.len()).product();
            if kernel.len() != input_size {
                return Err(NetError::Structure(format!(
                    "kernel covers {} inputs (expected {input_size})",
                    kernel.len()
                )));
            }
            for per_input in &kernel {
                if per_input.len() != tuple_count {
                    return Err(NetError::Structure(format!(
                        "kernel covers {} source tuples (expected {tuple_count})",
                        per_input.len()
                    )));
                }
                for pmf in per_input {
                    if pmf.len() != output_size {
                        return Err(NetError::Structure(format!(
                            "kernel row has {} outputs (expected {output_size})",
                            pmf.len()
                        )));
                    }
                }
            }
            Ok(NetworkSpec::Blackbox {
                input_size,
                output_size,
                sources,
                kernel,
            })
        }
    }
}

fn check_source_ids(sources: &[SourceSpec]) -> Result<(), NetError> {
    let mut seen = BTreeSet::new();
    for source in sources {
        if !seen.insert(&source.id) {
            return Err(NetError::Structure(format!(
                "duplicate source id '{}'",
                source.id
            )));
        }
    }
    Ok(())
}

fn joint_sizes(spec: &NetworkSpec) -> Result<(usize, usize), NetError> {
    match spec {
        NetworkSpec::Structured { parties, .. } => {
            let input = parties
                .iter()
                .try_fold(1usize, |acc, p| acc.checked_mul(p.input_size));
            let output = parties
                .iter()
                .try_fold(1usize, |acc, p| acc.checked_mul(p.output_size));
            match (input, output) {
                (Some(x), Some(a)) => Ok((x, a)),
                _ => Err(NetError::Structure("joint alphabet size overflows".into())),
            }
        }
        NetworkSpec::Blackbox {
            input_size,
            output_size,
            ..
        } => Ok((*input_size, *output_size)),
    }
}

/// Expands a structured network into the equivalent blackbox kernel.
/// Blackbox networks are returned unchanged.
pub fn expand_to_blackbox(net: &ValidatedNetwork, cap: u128) -> Result<ValidatedNetwork, NetError> {
    let NetworkSpec::Structured { parties, sources } = net.spec() else {
        return Ok(net.clone());
    };
    let full_radices: Vec<usize> = sources.iter().map(|s| s.pmf.len()).collect();
    let tuple_count = radix::cardinality(&full_radices);
    let cells = tuple_count
        .saturating_mul(net.input_size() as u128)
        .saturating_mul(net.output_size() as u128);
    if cells > cap {
        return Err(NetError::EnumerationCapExceeded { cells, cap });
    }
    let tuple_count = tuple_count as usize;
    let input_radices: Vec<usize> = parties.iter().map(|p| p.input_size).collect();
    let output_radices: Vec<usize> = parties.iter().map(|p| p.output_size).collect();
    let visible: Vec<Vec<usize>> = (0..parties.len())
        .map(|pi| {
            sources
                .iter()
                .enumerate()
                .filter(|(_, s)| s.visible_to.contains(&pi))
                .map(|(si, _)| si)
                .collect()
        })
        .collect();

    let mut kernel = Vec::with_capacity(net.input_size());
    for x in 0..net.input_size() {
        let inputs = radix::decompose(x, &input_radices);
        let mut per_input = Vec::with_capacity(tuple_count);
        for r in 0..tuple_count {
            let values = radix::decompose(r, &full_radices);
            let party_rows: Vec<&[f64]> = parties
                .iter()
                .enumerate()
                .map(|(pi, party)| {
                    let digits: Vec<usize> = visible[pi].iter().map(|&si| values[si]).collect();
                    let radices: Vec<usize> =
                        visible[pi].iter().map(|&si| full_radices[si]).collect();
                    party.strategy[inputs[pi]][radix::compose(&digits, &radices)].probs()
                })
                .collect();
            let mut row = vec![0.0; net.output_size()];
            accumulate_product(&mut row, &party_rows, &output_radices, 1.0);
            per_input.push(FinitePmf::new(row)?);
        }
        kernel.push(per_input);
    }
    ValidatedNetwork::new(NetworkSpec::Blackbox {
        input_size: net.input_size(),
        output_size: net.output_size(),
        sources: sources.clone(),
        kernel,
    })
}

/// Composes two networks side by side; the evaluation of the result is the
/// outer product of the individual evaluations.
///
/// On a source-id collision, every id is renamed with a per-network prefix
/// ("a." / "b."), which keeps each network's internal id order intact.
pub fn product_compose(
    n1: &ValidatedNetwork,
    n2: &ValidatedNetwork,
) -> Result<ValidatedNetwork, NetError> {
    let ids1: BTreeSet<&str> = n1.sources().iter().map(|s| s.id.as_str()).collect();
    let collision = n2.sources().iter().any(|s| ids1.contains(s.id.as_str()));
    let rename = |net: &ValidatedNetwork, prefix: &str| -> ValidatedNetwork {
        if !collision {
            return net.clone();
        }
        let mut spec = net.spec().clone();
        let sources = match &mut spec {
            NetworkSpec::Structured { sources, .. } => sources,
            NetworkSpec::Blackbox { sources, .. } => sources,
        };
        for s in sources.iter_mut() {
            s.id = format!("{prefix}{}", s.id);
        }
        ValidatedNetwork {
            spec,
            input_size: net.input_size,
            output_size: net.output_size,
        }
    };
    let n1 = rename(n1, "a.");
    let n2 = rename(n2, "b.");

    match (n1.spec(), n2.spec()) {
        (
            NetworkSpec::Structured {
                parties: p1,
                sources: s1,
            },
            NetworkSpec::Structured {
                parties: p2,
                sources: s2,
            },
        ) => {
            let mut parties = p1.clone();
            parties.extend(p2.iter().cloned());
            let mut sources = s1.clone();
            let shift = p1.len();
            for s in s2 {
                let mut s = s.clone();
                s.visible_to = s.visible_to.iter().map(|&pi| pi + shift).collect();
                sources.push(s);
            }
            ValidatedNetwork::new(NetworkSpec::Structured { parties, sources })
        }
        _ => {
            let b1 = expand_to_blackbox(&n1, DEFAULT_ENUM_CAP)?;
            let b2 = expand_to_blackbox(&n2, DEFAULT_ENUM_CAP)?;
            compose_blackboxes(&b1, &b2)
        }
    }
}

fn compose_blackboxes(
    b1: &ValidatedNetwork,
    b2: &ValidatedNetwork,
) -> Result<ValidatedNetwork, NetError> {
    let (NetworkSpec::Blackbox {
        sources: s1,
        kernel: k1,
        ..
    }, NetworkSpec::Blackbox {
        sources: s2,
        kernel: k2,
        ..
    }) = (b1.spec(), b2.spec())
    else {
        unreachable!("compose_blackboxes takes blackbox networks");
    };

    // Merged source order is by id; record which network each merged source
    // came from and its position there.
    let mut merged: Vec<(bool, usize, &SourceSpec)> = s1
        .iter()
        .enumerate()
        .map(|(i, s)| (false, i, s))
        .chain(s2.iter().enumerate().map(|(i, s)| (true, i, s)))
        .collect();
    merged.sort_by(|a, b| a.2.id.cmp(&b.2.id));
    let merged_radices: Vec<usize> = merged.iter().map(|(_, _, s)| s.pmf.len()).collect();
    let tuple_count = radix::cardinality(&merged_radices);
    let input_size = b1.input_size() * b2.input_size();
    let output_size = b1.output_size() * b2.output_size();
    let cells = tuple_count
        .saturating_mul(input_size as u128)
        .saturating_mul(output_size as u128);
    if cells > DEFAULT_ENUM_CAP {
        return Err(NetError::EnumerationCapExceeded {
            cells,
            cap: DEFAULT_ENUM_CAP,
        });
    }
    let tuple_count = tuple_count as usize;
    let radices1: Vec<usize> = s1.iter().map(|s| s.pmf.len()).collect();
    let radices2: Vec<usize> = s2.iter().map(|s| s.pmf.len()).collect();

    let mut kernel = Vec::with_capacity(input_size);
    for x in 0..input_size {
        let (x1, x2) = (x / b2.input_size(), x % b2.input_size());
        let mut per_input = Vec::with_capacity(tuple_count);
        for r in 0..tuple_count {
            let values = radix::decompose(r, &merged_radices);
            let mut v1 = vec![0usize; s1.len()];
            let mut v2 = vec![0usize; s2.len()];
            for (slot, &(from2, pos, _)) in values.iter().zip(&merged) {
                if from2 {
                    v2[pos] = *slot;
                } else {
                    v1[pos] = *slot;
                }
            }
            let r1 = radix::compose(&v1, &radices1);
            let r2 = radix::compose(&v2, &radices2);
            let row1 = k1[x1][r1].probs();
            let row2 = k2[x2][r2].probs();
            let mut row = Vec::with_capacity(output_size);
            for &p in row1 {
                for &q in row2 {
                    row.push(p * q);
                }
            }
            per_input.push(FinitePmf::new(row)?);
        }
        kernel.push(per_input);
    }

    let sources = merged.into_iter().map(|(_, _, s)| s.clone()).collect();
    ValidatedNetwork::new(NetworkSpec::Blackbox {
        input_size,
        output_size,
        sources,
        kernel,
    })
}

#[cfg(test)]
mod tests;
