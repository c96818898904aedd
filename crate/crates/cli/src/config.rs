//! Experiment parameters from flags and an optional TOML or JSON file.
//! Every flag has a config key of the same name (with underscores); flags win.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// List of layer counts: `3`, `1,2,4`, `1..6` (inclusive) or a mix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PListRepr", into = "Vec<usize>")]
pub struct PList(pub Vec<usize>);

#[derive(Deserialize)]
#[serde(untagged)]
enum PListRepr {
    One(usize),
    Many(Vec<usize>),
    Text(String),
}

impl TryFrom<PListRepr> for PList {
    type Error = String;

    fn try_from(r: PListRepr) -> Result<Self, String> {
        match r {
            PListRepr::One(p) => Ok(PList(vec![p])),
            PListRepr::Many(v) => Ok(PList(v)),
            PListRepr::Text(s) => s.parse(),
        }
    }
}

impl From<PList> for Vec<usize> {
    fn from(p: PList) -> Self {
        p.0
    }
}

impl FromStr for PList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let parse = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("bad layer count '{t}' in '{s}'"))
            };
            match part.split_once("..") {
                Some((a, b)) => {
                    let b = b.strip_prefix('=').unwrap_or(b);
                    let (a, b) = (parse(a)?, parse(b)?);
                    if a > b {
                        return Err(format!("empty range '{part}'"));
                    }
                    out.extend(a..=b);
                }
                None => out.push(parse(part)?),
            }
        }
        if out.is_empty() {
            return Err(format!("no layer counts in '{s}'"));
        }
        out.sort_unstable();
        out.dedup();
        Ok(PList(out))
    }
}

impl fmt::Display for PList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", s.join(","))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Patch names, e.g. 2x4, 3x8, tri1, or any RxC strip.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none", alias = "patches")]
    pub patch: Option<Vec<String>>,

    /// Ansatz schemes: per_hamiltonian, per_edge_color, per_edge_color_ii, per_edge.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none", alias = "schemes")]
    pub scheme: Option<Vec<String>>,

    /// Layer counts: 5, 1,2,4 or 1..8.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<PList>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Output directory. Defaults to `$KAGOME_OUT/<experiment>`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    /// Shots per measurement basis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,

    /// Fidelity thresholds for the required-depth table.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,

    /// Initial parameters: random, ramp or mixed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,

    /// Step size of the ramp initialisation; defaults to 1/p.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp_delta: Option<f64>,

    /// Number of eigenpairs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,

    /// Sector: sz0, sz_plus or odd for VQE runs; an integer S^z (Pauli
    /// units) or `all` for the eigensolver.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector: Option<String>,

    /// Hardware topology: square or all-to-all.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<String>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,

    /// Count an interaction as two native gates and a SWAP as three.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub native: Option<bool>,

    /// Random parameter points per gradient-study cell.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,

    /// exact or vqe.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,

    /// Fidelity below which a VQE spin-gap run is flagged as unconverged.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_target: Option<f64>,

    /// Worker threads for sweeps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,

    /// Permit patches above 20 qubits.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_large: Option<bool>,

    /// shared or per_dimer parameters for the dimer gates of per_edge.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimer_tying: Option<String>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,

    /// Points per axis of the structure-factor grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_points: Option<usize>,

    /// Input CSV for `plot`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,

    /// Plot kind: sweep, threshold, gradstudy, correlations or sfactor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

/// Config file contents: parameters plus an optional experiment name.
#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    experiment: Option<String>,
    #[serde(flatten)]
    params: Map<String, Value>,
}

fn to_object(p: &Params) -> Map<String, Value> {
    match serde_json::to_value(p).expect("params serialise") {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

/// Read a config file, TOML unless the extension is `.json`.
pub fn load_file(path: &Path) -> Result<(Option<String>, Params), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let file: FileConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    };
    let params = serde_json::from_value(Value::Object(file.params))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((file.experiment, params))
}

/// Flags override file values key by key.
pub fn merge(file: &Params, flags: &Params) -> Params {
    let mut m = to_object(file);
    m.extend(to_object(flags));
    serde_json::from_value(Value::Object(m)).expect("merged params deserialise")
}

/// Keys that are set but not in `allowed`.
pub fn unused_keys(p: &Params, allowed: &[&str]) -> Vec<String> {
    to_object(p)
        .keys()
        .filter(|k| !allowed.contains(&k.as_str()))
        .cloned()
        .collect()
}

pub fn as_json(p: &Params) -> Value {
    Value::Object(to_object(p))
}
