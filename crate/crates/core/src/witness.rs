//! Brute-force feasibility of exact realization with a shared source of a
//! given cardinality under deterministic local strategies.
//!
//! The search enumerates every tuple of deterministic strategies in
//! lexicographic order (party 0 most significant; within a party, the
//! strategy is a base-`|A_i|` integer over `|X_i| * m` digits ordered by
//! `(x, r)`, `x` major, most significant first). For each tuple the induced
//! distribution is linear in the `m` unknown source weights, so a small
//! least-squares solve plus a nonnegativity check decides acceptance.
//!
//! The deterministic-strategy restriction is sound only for targets whose
//! perfect correlations force determinism (the two scenarios in
//! [`crate::scenarios`] qualify); callers assert this property.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{
    radix, ConditionalDistribution, NetError, NetworkSpec, PartySpec, SourceSpec, ValidatedNetwork,
};
use crate::pmf::FinitePmf;

/// Default cap on elementary search steps.
pub const DEFAULT_SEARCH_CAP: u128 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("search cap exceeded: {steps} steps > cap {cap}")]
    SearchCapExceeded { steps: u128, cap: u128 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Exact-realization query: can `target` be produced with a shared source of
/// cardinality `m` and deterministic local strategies?
#[derive(Debug, Clone)]
pub struct FeasibilityProblem {
    pub target: ConditionalDistribution,
    /// `(|X_i|, |A_i|)` per party.
    pub party_alphabets: Vec<(usize, usize)>,
    /// Candidate source cardinality.
    pub m: usize,
    pub tolerance: f64,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

impl FeasibilityProblem {
    pub fn new(
        target: ConditionalDistribution,
        party_alphabets: Vec<(usize, usize)>,
        m: usize,
    ) -> Result<Self, WitnessError> {
        let problem = Self {
            target,
            party_alphabets,
            m,
            tolerance: DEFAULT_TOLERANCE,
        };
        problem.check_shape()?;
        Ok(problem)
    }

    fn check_shape(&self) -> Result<(), WitnessError> {
        if self.m == 0 {
            return Err(WitnessError::ShapeMismatch("m must be >= 1".into()));
        }
        if self.party_alphabets.is_empty() {
            return Err(WitnessError::ShapeMismatch("no parties".into()));
        }
        let x: usize = self.party_alphabets.iter().map(|&(x, _)| x).product();
        let a: usize = self.party_alphabets.iter().map(|&(_, a)| a).product();
        if self.target.input_size() != x || self.target.output_size() != a {
            return Err(WitnessError::ShapeMismatch(format!(
                "target is {}x{}, alphabets give {x}x{a}",
                self.target.input_size(),
                self.target.output_size()
            )));
        }
        Ok(())
    }

    /// Strategy-tuple count, saturating.
    fn tuple_count(&self) -> u128 {
        self.party_alphabets.iter().fold(1u128, |acc, &(x, a)| {
            let per_party = (a as u128).saturating_pow((x * self.m) as u32);
            acc.saturating_mul(per_party)
        })
    }
}

/// A source PMF plus deterministic strategies reproducing a target.
/// `strategies[i][x * m + r]` is party `i`'s output on `(x, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub source_pmf: FinitePmf,
    pub strategies: Vec<Vec<usize>>,
}

/// Searches for the lexicographically smallest accepted strategy tuple.
/// Returns `None` when no tuple admits nonnegative source weights that
/// reproduce the target within tolerance.
pub fn deterministic_feasible(
    problem: &FeasibilityProblem,
    cap: u128,
) -> Result<Option<Realization>, WitnessError> {
    problem.check_shape()?;
    let tuple_count = problem.tuple_count();
    let step_cost = (problem.target.input_size() * problem.m) as u128;
    let steps = tuple_count.saturating_mul(step_cost);
    if steps > cap {
        return Err(WitnessError::SearchCapExceeded { steps, cap });
    }
    let tuple_count = tuple_count as u64;
    let search = SearchContext::new(problem);
    let found = (0..tuple_count)
        .into_par_iter()
        .find_first(|&t| search.solve(t).is_some());
    Ok(found.map(|t| search.solve(t).expect("accepted tuple re-solves")))
}

/// Precomputed tables shared by all tuple checks.
struct SearchContext<'a> {
    problem: &'a FeasibilityProblem,
    /// Per-party strategy space size `|A_i|^(|X_i| m)`.
    party_spaces: Vec<u64>,
    /// Joint inputs decomposed into per-party inputs.
    inputs: Vec<Vec<usize>>,
    output_radices: Vec<usize>,
}

impl<'a> SearchContext<'a> {
    fn new(problem: &'a FeasibilityProblem) -> Self {
        let m = problem.m;
        let party_spaces = problem
            .party_alphabets
            .iter()
            .map(|&(x, a)| (a as u64).pow((x * m) as u32))
            .collect();
        let input_radices: Vec<usize> = problem.party_alphabets.iter().map(|&(x, _)| x).collect();
        let inputs = (0..problem.target.input_size())
            .map(|x| radix::decompose(x, &input_radices))
            .collect();
        let output_radices = problem.party_alphabets.iter().map(|&(_, a)| a).collect();
        Self {
            problem,
            party_spaces,
            inputs,
            output_radices,
        }
    }

    /// Decodes tuple index `t` into per-party strategy maps.
    fn decode(&self, mut t: u64) -> Vec<Vec<usize>> {
        let m = self.problem.m;
        let mut strategies = vec![Vec::new(); self.party_spaces.len()];
        for (i, &space) in self.party_spaces.iter().enumerate().rev() {
            let s = t % space;
            t /= space;
            let (x_size, a_size) = self.problem.party_alphabets[i];
            strategies[i] = radix::decompose(s as usize, &vec![a_size; x_size * m]);
        }
        strategies
    }

    /// Tests one strategy tuple; returns the clamped, renormalized source
    /// weights when accepted.
    fn solve(&self, t: u64) -> Option<Realization> {
        let m = self.problem.m;
        let target = &self.problem.target;
        let tolerance = self.problem.tolerance;
        let strategies = self.decode(t);

        // Joint output induced by each (joint input, source value).
        let x_count = target.input_size();
        let mut amap = vec![0usize; x_count * m];
        for (x, inputs) in self.inputs.iter().enumerate() {
            for r in 0..m {
                let digits: Vec<usize> = strategies
                    .iter()
                    .zip(inputs)
                    .map(|(s, &xi)| s[xi * m + r])
                    .collect();
                amap[x * m + r] = radix::compose(&digits, &self.output_radices);
            }
        }

        // Least squares over the |X||A| linear equations plus sum-to-one.
        // Normal equations exploit that each (x, r) hits exactly one output.
        let mut ata = vec![vec![1.0f64; m]; m];
        let mut atb = vec![1.0f64; m];
        for x in 0..x_count {
            let row = &amap[x * m..(x + 1) * m];
            for r in 0..m {
                for s in 0..m {
                    if row[r] == row[s] {
                        ata[r][s] += 1.0;
                    }
                }
                atb[r] += target.prob(x, row[r]);
            }
        }
        let weights = solve_symmetric(&mut ata, &mut atb);

        // Residual over every equation, including outputs no source hits.
        if (weights.iter().sum::<f64>() - 1.0).abs() > tolerance {
            return None;
        }
        if weights.iter().any(|&w| w < -tolerance) {
            return None;
        }
        let mut predicted = vec![0.0f64; target.output_size()];
        for x in 0..x_count {
            for p in predicted.iter_mut() {
                *p = 0.0;
            }
            for r in 0..m {
                predicted[amap[x * m + r]] += weights[r];
            }
            for (a, &p) in predicted.iter().enumerate() {
                if (p - target.prob(x, a)).abs() > tolerance {
                    return None;
                }
            }
        }

        let clamped: Vec<f64> = weights.iter().map(|&w| w.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let source_pmf = FinitePmf::new(clamped.into_iter().map(|w| w / total).collect())
            .expect("clamped weights normalize");
        Some(Realization {
            source_pmf,
            strategies,
        })
    }
}

/// Gaussian elimination with partial pivoting on a small symmetric system.
/// Near-zero pivots (dependent columns) pin that unknown to zero.
#[allow(clippy::needless_range_loop)]
fn solve_symmetric(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        if a[col][col].abs() < 1e-10 {
            continue;
        }
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut solution = vec![0.0f64; n];
    for col in (0..n).rev() {
        if a[col][col].abs() < 1e-10 {
            solution[col] = 0.0;
            continue;
        }
        let mut value = b[col];
        for k in (col + 1)..n {
            value -= a[col][k] * solution[k];
        }
        solution[col] = value / a[col][col];
    }
    solution
}

/// Smallest `m <= m_max` admitting a realization, or `None`.
pub fn min_cardinality(
    target: &ConditionalDistribution,
    party_alphabets: &[(usize, usize)],
    m_max: usize,
    cap: u128,
) -> Result<Option<usize>, WitnessError> {
    for m in 1..=m_max {
        let problem = FeasibilityProblem::new(target.clone(), party_alphabets.to_vec(), m)?;
        if deterministic_feasible(&problem, cap)?.is_some() {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// Converts a realization into a one-source structured network, so its
/// evaluation can be checked against the target.
pub fn realization_to_network(
    realization: &Realization,
    party_alphabets: &[(usize, usize)],
) -> Result<ValidatedNetwork, WitnessError> {
    let m = realization.source_pmf.len();
    let parties = party_alphabets
        .iter()
        .zip(&realization.strategies)
        .enumerate()
        .map(|(i, (&(x_size, a_size), strategy))| {
            if strategy.len() != x_size * m {
                return Err(WitnessError::ShapeMismatch(format!(
                    "party {i} strategy has {} entries (expected {})",
                    strategy.len(),
                    x_size * m
                )));
            }
            Ok(PartySpec {
                name: format!("party{i}"),
                input_size: x_size,
                output_size: a_size,
                strategy: (0..x_size)
                    .map(|x| {
                        (0..m)
                            .map(|r| FinitePmf::point_mass(a_size, strategy[x * m + r]))
                            .collect()
                    })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let net = ValidatedNetwork::new(NetworkSpec::Structured {
        parties,
        sources: vec![SourceSpec {
            id: "r".into(),
            pmf: realization.source_pmf.clone(),
            visible_to: (0..party_alphabets.len()).collect::<BTreeSet<_>>(),
        }],
    })?;
    Ok(net)
}

/// Checks the weighted inner-product pattern of a matching-inputs
/// realization: with `u_x[r] = 1` iff the party outputs 1 on `(x, r)`,
/// `<u_x, u_y>_p` must be 1/2 on the diagonal and 1/4 off it, and the
/// centered vectors `v_x = u_x - 1/2` must be orthogonal with norm^2 = 1/4.
pub fn verify_inner_product_pattern(
    realization: &Realization,
    x_size: usize,
) -> Result<bool, WitnessError> {
    let m = realization.source_pmf.len();
    let strategy = realization
        .strategies
        .first()
        .ok_or_else(|| WitnessError::ShapeMismatch("realization has no parties".into()))?;
    if strategy.len() != x_size * m {
        return Err(WitnessError::ShapeMismatch(format!(
            "strategy has {} entries (expected {})",
            strategy.len(),
            x_size * m
        )));
    }
    if strategy.iter().any(|&a| a > 1) {
        return Err(WitnessError::ShapeMismatch("outputs must be bits".into()));
    }
    let weights = realization.source_pmf.probs();
    let tol = 1e-9;
    let inner = |x: usize, y: usize, centered: bool| -> f64 {
        (0..m)
            .map(|r| {
                let ux = strategy[x * m + r] as f64;
                let uy = strategy[y * m + r] as f64;
                if centered {
                    weights[r] * (ux - 0.5) * (uy - 0.5)
                } else {
                    weights[r] * ux * uy
                }
            })
            .sum()
    };
    for x in 0..x_size {
        for y in 0..x_size {
            let expected = if x == y { 0.5 } else { 0.25 };
            if (inner(x, y, false) - expected).abs() > tol {
                return Ok(false);
            }
            let expected_centered = if x == y { 0.25 } else { 0.0 };
            if (inner(x, y, true) - expected_centered).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
