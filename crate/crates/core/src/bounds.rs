//! Closed-form cardinality bounds and figure-curve emitters.
//!
//! Integer calculators return the smallest integer *strictly greater* than
//! the real-valued threshold (when the threshold lands exactly on an integer
//! the next one is returned). Figure emitters evaluate the un-ceiled real
//! expressions, which is what the plotted curves show. Powers `x^h` are taken
//! in the log domain so large exploratory parameters do not overflow early.

use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("bound exceeds integer range (threshold {threshold:e})")]
    Overflow { threshold: f64 },
    #[error("invalid delta split: {0}")]
    InvalidSplit(String),
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

/// Allocation of a total tolerance across sources: positive weights summing
/// to 1 (within 1e-12); stage `i` receives tolerance `epsilon * deltas[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSplit {
    deltas: Vec<f64>,
}

impl DeltaSplit {
    pub fn new(deltas: Vec<f64>) -> Result<Self, BoundsError> {
        if deltas.is_empty() {
            return Err(BoundsError::InvalidSplit("empty split".into()));
        }
        if deltas.iter().any(|&d| d <= 0.0 || d.is_nan()) {
            return Err(BoundsError::InvalidSplit(
                "every delta must be positive".into(),
            ));
        }
        let sum: f64 = deltas.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(BoundsError::InvalidSplit(format!(
                "deltas sum to {sum} (must be 1)"
            )));
        }
        Ok(Self { deltas })
    }

    /// `delta_i = 1/m` for all stages.
    pub fn equal(m: usize) -> Self {
        assert!(m >= 1);
        Self {
            deltas: vec![1.0 / m as f64; m],
        }
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

/// Smallest u64 strictly greater than `threshold`.
fn strictly_above(threshold: f64) -> Result<u64, BoundsError> {
    if !threshold.is_finite() || threshold >= u64::MAX as f64 {
        return Err(BoundsError::Overflow { threshold });
    }
    if threshold < 0.0 {
        return Ok(0);
    }
    Ok(threshold.floor() as u64 + 1)
}

fn check_positive(value: u64, name: &str) -> Result<(), BoundsError> {
    if value == 0 {
        return Err(BoundsError::InvalidParam(format!("{name} must be >= 1")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<(), BoundsError> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(BoundsError::InvalidParam("epsilon must be > 0".into()));
    }
    Ok(())
}

/// `ln(2 x^h)` evaluated as `ln 2 + h ln x`.
fn ln_2_pow(x: f64, h: f64) -> f64 {
    std::f64::consts::LN_2 + h * x.ln()
}

/// Sample count sufficient to compress one source to tolerance `epsilon`:
/// smallest integer strictly greater than `ln(2 |X| |A|) / (2 eps^2)`.
pub fn single_source_bound(x_size: u64, a_size: u64, epsilon: f64) -> Result<u64, BoundsError> {
    check_positive(x_size, "|X|")?;
    check_positive(a_size, "|A|")?;
    check_epsilon(epsilon)?;
    let ln_term = (2.0 * x_size as f64 * a_size as f64).ln();
    strictly_above(ln_term / (2.0 * epsilon * epsilon))
}

/// Per-source sample counts for sequential compression under a delta split:
/// `n_i` strictly greater than `ln(2 |X| |A|) / (2 (eps delta_i)^2)`.
pub fn multi_source_bound(
    x_size: u64,
    a_size: u64,
    epsilon: f64,
    split: &DeltaSplit,
) -> Result<Vec<u64>, BoundsError> {
    split
        .deltas()
        .iter()
        .map(|&delta| single_source_bound(x_size, a_size, epsilon * delta))
        .collect()
}

/// Equal-split bound for `h` parties, `m` sources, per-party alphabet product
/// `|X_i||A_i|`: smallest integer strictly greater than
/// `(m^2 / 2 eps^2) (ln 2 + h ln(|X_i||A_i|))`.
pub fn general_equal_split_bound(
    h: u64,
    per_party_xa: u64,
    m: u64,
    epsilon: f64,
) -> Result<u64, BoundsError> {
    check_positive(h, "h")?;
    check_positive(per_party_xa, "|X_i||A_i|")?;
    check_positive(m, "m")?;
    check_epsilon(epsilon)?;
    strictly_above(approx_bound_real(h, per_party_xa, m, epsilon))
}

/// Un-ceiled approximate-case curve value `(m/eps)^2 ln(2 x^h) / 2`.
pub fn approx_bound_real(h: u64, per_party_xa: u64, m: u64, epsilon: f64) -> f64 {
    let m = m as f64;
    (m / epsilon).powi(2) * ln_2_pow(per_party_xa as f64, h as f64) / 2.0
}

/// Exact-realization bound `(|X_i||A_i|)^h + 1`.
pub fn exact_bound(h: u64, per_party_xa: u64) -> Result<u64, BoundsError> {
    check_positive(h, "h")?;
    check_positive(per_party_xa, "|X_i||A_i|")?;
    let h32 = u32::try_from(h).map_err(|_| BoundsError::Overflow {
        threshold: f64::INFINITY,
    })?;
    per_party_xa
        .checked_pow(h32)
        .and_then(|p| p.checked_add(1))
        .ok_or(BoundsError::Overflow {
            threshold: exact_bound_real(h, per_party_xa),
        })
}

/// Real-valued exact-case curve `x^h + 1`, log-domain power.
pub fn exact_bound_real(h: u64, per_party_xa: u64) -> f64 {
    ((h as f64) * (per_party_xa as f64).ln()).exp() + 1.0
}

/// Tolerance at which the approximate bound equals the exact bound:
/// `eps* = m sqrt( ln(2 x^h) / (2 (x^h + 1)) )`.
pub fn crossover_epsilon(h: u64, m: u64, per_party_xa: u64) -> f64 {
    let pow = ((h as f64) * (per_party_xa as f64).ln()).exp();
    m as f64 * (ln_2_pow(per_party_xa as f64, h as f64) / (2.0 * (pow + 1.0))).sqrt()
}

/// Which figure to emit.
#[derive(Debug, Clone, PartialEq)]
pub enum FigureKind {
    /// Source-cardinality curves at a fixed tolerance: Bell (h=2, m=1) and
    /// triangle (h=3, m=3) approximate and exact bounds.
    Cardinality { epsilon: f64 },
    /// Crossover tolerance curves for the requested `(h, m)` pairs.
    Crossover { pairs: Vec<(u64, u64)> },
}

/// One emitted figure: a header and numeric rows, first column `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FigureTable {
    /// CSV with 17-significant-digit floats.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Evaluates the requested figure's curves over `x_range` (per-party alphabet
/// products, ascending).
pub fn emit_figure_data(figure: &FigureKind, x_range: &[f64]) -> Result<FigureTable, BoundsError> {
    if x_range.is_empty() {
        return Err(BoundsError::InvalidRange("empty x range".into()));
    }
    if x_range.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BoundsError::InvalidRange("x range must be ascending".into()));
    }
    if x_range[0] < 1.0 {
        return Err(BoundsError::InvalidRange("x must be >= 1".into()));
    }
    match figure {
        FigureKind::Cardinality { epsilon } => {
            check_epsilon(*epsilon)?;
            let approx = |x: f64, h: f64, m: f64| (m / epsilon).powi(2) * ln_2_pow(x, h) / 2.0;
            let exact = |x: f64, h: f64| (h * x.ln()).exp() + 1.0;
            let rows = x_range
                .iter()
                .map(|&x| {
                    vec![
                        x,
                        approx(x, 2.0, 1.0),
                        exact(x, 2.0),
                        approx(x, 3.0, 3.0),
                        exact(x, 3.0),
                    ]
                })
                .collect();
            Ok(FigureTable {
                header: ["x", "bell_approx", "bell_exact", "triangle_approx", "triangle_exact"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                rows,
            })
        }
        FigureKind::Crossover { pairs } => {
            if pairs.is_empty() {
                return Err(BoundsError::InvalidRange("no (h, m) pairs".into()));
            }
            let mut header = vec!["x".to_string()];
            header.extend(pairs.iter().map(|(h, m)| format!("eps_h{h}_m{m}")));
            let rows = x_range
                .iter()
                .map(|&x| {
                    let mut row = vec![x];
                    row.extend(pairs.iter().map(|&(h, m)| {
                        let pow = ((h as f64) * x.ln()).exp();
                        m as f64 * (ln_2_pow(x, h as f64) / (2.0 * (pow + 1.0))).sqrt()
                    }));
                    row
                })
                .collect();
            Ok(FigureTable { header, rows })
        }
    }
}
