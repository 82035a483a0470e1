//! On-disk formats: JSON network specs and CSV distribution export.
//!
//! Structured form:
//! `{"parties":[{"name","inputs","outputs","sees":[ids],"strategy":[[[p..]..]..]}],
//!   "sources":[{"id","pmf":[..]}]}`
//! Blackbox form:
//! `{"blackbox":{"inputs","outputs","sources":[..],"kernel":[[[p..]..]..]}}`
//! Strategy/kernel nesting is `[input][source-tuple index][output]`.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::pmf::FinitePmf;

use super::{ConditionalDistribution, NetError, NetworkSpec, PartySpec, SourceSpec, ValidatedNetwork};

#[derive(Debug, Serialize, Deserialize)]
struct SourceFile {
    id: String,
    pmf: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PartyFile {
    name: String,
    inputs: usize,
    outputs: usize,
    sees: Vec<String>,
    strategy: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlackboxFile {
    inputs: usize,
    outputs: usize,
    sources: Vec<SourceFile>,
    kernel: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum NetworkFile {
    Structured {
        parties: Vec<PartyFile>,
        sources: Vec<SourceFile>,
    },
    Blackbox {
        blackbox: BlackboxFile,
    },
}

fn pmf_table(raw: Vec<Vec<Vec<f64>>>) -> Result<Vec<Vec<FinitePmf>>, NetError> {
    raw.into_iter()
        .map(|per_input| {
            per_input
                .into_iter()
                .map(|row| FinitePmf::new(row).map_err(NetError::from))
                .collect()
        })
        .collect()
}

fn raw_table(table: &[Vec<FinitePmf>]) -> Vec<Vec<Vec<f64>>> {
    table
        .iter()
        .map(|per_input| per_input.iter().map(|pmf| pmf.probs().to_vec()).collect())
        .collect()
}

/// Parses a JSON network spec and validates it.
pub fn network_from_json(json: &str) -> Result<ValidatedNetwork, NetError> {
    let file: NetworkFile = serde_json::from_str(json)
        .map_err(|e| NetError::Structure(format!("invalid network JSON: {e}")))?;
    let spec = match file {
        NetworkFile::Structured { parties, sources } => {
            let mut specs: Vec<SourceSpec> = sources
                .into_iter()
                .map(|s| {
                    Ok(SourceSpec {
                        id: s.id,
                        pmf: FinitePmf::new(s.pmf)?,
                        visible_to: BTreeSet::new(),
                    })
                })
                .collect::<Result<_, NetError>>()?;
            let parties = parties
                .into_iter()
                .enumerate()
                .map(|(pi, p)| {
                    for seen in &p.sees {
                        let source = specs
                            .iter_mut()
                            .find(|s| &s.id == seen)
                            .ok_or_else(|| {
                                NetError::Structure(format!(
                                    "party '{}' sees unknown source '{seen}'",
                                    p.name
                                ))
                            })?;
                        source.visible_to.insert(pi);
                    }
                    Ok(PartySpec {
                        name: p.name,
                        input_size: p.inputs,
                        output_size: p.outputs,
                        strategy: pmf_table(p.strategy)?,
                    })
                })
                .collect::<Result<_, NetError>>()?;
            NetworkSpec::Structured {
                parties,
                sources: specs,
            }
        }
        NetworkFile::Blackbox { blackbox } => NetworkSpec::Blackbox {
            input_size: blackbox.inputs,
            output_size: blackbox.outputs,
            sources: blackbox
                .sources
                .into_iter()
                .map(|s| {
                    Ok(SourceSpec {
                        id: s.id,
                        pmf: FinitePmf::new(s.pmf)?,
                        visible_to: BTreeSet::new(),
                    })
                })
                .collect::<Result<_, NetError>>()?,
            kernel: pmf_table(blackbox.kernel)?,
        },
    };
    ValidatedNetwork::new(spec)
}

/// Serializes a network to the JSON spec format (pretty-printed).
pub fn network_to_json(net: &ValidatedNetwork) -> String {
    let file = match net.spec() {
        NetworkSpec::Structured { parties, sources } => NetworkFile::Structured {
            parties: parties
                .iter()
                .enumerate()
                .map(|(pi, p)| PartyFile {
                    name: p.name.clone(),
                    inputs: p.input_size,
                    outputs: p.output_size,
                    sees: sources
                        .iter()
                        .filter(|s| s.visible_to.contains(&pi))
                        .map(|s| s.id.clone())
                        .collect(),
                    strategy: raw_table(&p.strategy),
                })
                .collect(),
            sources: sources
                .iter()
                .map(|s| SourceFile {
                    id: s.id.clone(),
                    pmf: s.pmf.probs().to_vec(),
                })
                .collect(),
        },
        NetworkSpec::Blackbox {
            input_size,
            output_size,
            sources,
            kernel,
        } => NetworkFile::Blackbox {
            blackbox: BlackboxFile {
                inputs: *input_size,
                outputs: *output_size,
                sources: sources
                    .iter()
                    .map(|s| SourceFile {
                        id: s.id.clone(),
                        pmf: s.pmf.probs().to_vec(),
                    })
                    .collect(),
                kernel: raw_table(kernel),
            },
        },
    };
    serde_json::to_string_pretty(&file).expect("network file serializes")
}

/// Writes `x,a,p` rows in ascending `(x, a)` order, 17 significant digits.
pub fn distribution_to_csv<W: Write>(
    dist: &ConditionalDistribution,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "x,a,p")?;
    for (x, row) in dist.rows().iter().enumerate() {
        for (a, &p) in row.probs().iter().enumerate() {
            writeln!(out, "{x},{a},{p:.16e}")?;
        }
    }
    Ok(())
}
