use std::path::{Path, PathBuf};

use doslab_core::config::{SpaceSpec, WeightChoice};
use doslab_core::ergodic::FolnerSequence;
use doslab_core::hamiltonians::HamiltonianSpec;
use doslab_core::spectral_core::ScalarFunction;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Tolerances checked by `theorem-check`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub relative_gap: f64,
    /// Bound on `|residual growth| / scale` of the modulated gap.
    pub modulated_growth: f64,
    pub dos_spread: f64,
    pub c_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            relative_gap: 0.10,
            modulated_growth: 0.05,
            dos_spread: 0.01,
            c_threshold: 0.01,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Secondary table (Cesàro series, per-realization rows, sample file).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<PathBuf>,
}

/// One experiment. Every field is optional; each subcommand reads the ones
/// it needs and flags override them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<ScalarFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Ladder radius, IDS radius, or `R_outer`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folner: Option<FolnerSequence>,
    /// Index `n` of the Følner set used for ergodic averages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folner_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "is_default")]
    pub outputs: Outputs,
}

fn is_default(o: &Outputs) -> bool {
    *o == Outputs::default()
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Keys of `input` that did not survive a round trip through the typed
/// config. Catches extra keys next to unit enum variants, which serde skips.
fn dropped_keys(input: &Value, canonical: &Value, path: &str, out: &mut Vec<String>) {
    match (input, canonical) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get(k) {
                    Some(w) => dropped_keys(v, w, &p, out),
                    None => out.push(p),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            for (i, (v, w)) in a.iter().zip(b).enumerate() {
                dropped_keys(v, w, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError(format!("config is not valid JSON: {e}")))?;
        let config: ExperimentConfig = serde_path_to_error::deserialize(value.clone()).map_err(|e| {
            let path = e.path().to_string();
            ConfigError(format!("config error at `{path}`: {}", e.into_inner()))
        })?;
        let canonical = serde_json::to_value(&config).expect("config serializes");
        let mut extra = Vec::new();
        dropped_keys(&value, &canonical, "", &mut extra);
        if let Some(first) = extra.first() {
            return Err(ConfigError(format!("config error at `{first}`: unknown field")));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// SHA-256 over the subcommand and the canonical JSON of the effective
    /// config, output paths excluded.
    pub fn hash(&self, command: &str) -> String {
        let mut c = self.clone();
        c.outputs = Outputs::default();
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0u8]);
        h.update(serde_json::to_vec(&c).expect("config serializes"));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
