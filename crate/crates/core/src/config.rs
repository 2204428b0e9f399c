//! Serializable descriptors for spaces and weights, as they appear in
//! experiment configs.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hamiltonians::{default_weight, lattice_weight, WeightFunction, WeightProvenance};
use crate::metric_spaces::{ingest_graph, DiscreteSpace, PNorm, RadiiLadder};
use crate::percolation::{largest_cluster, percolate_bonds_with_budget};

fn two() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Lattice {
        dim: usize,
        #[serde(default = "two")]
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Vec<i64>>,
    },
    CayleyF2,
    HalfLine {
        n: u64,
    },
    EdgeList {
        path: PathBuf,
        base: u64,
    },
    /// Largest open cluster of bond percolation on `{0..L-1}^d`.
    Percolation {
        dim: usize,
        side: usize,
        p: f64,
        seed: u64,
    },
}

impl SpaceSpec {
    pub fn lattice(dim: usize, p: f64) -> Self {
        SpaceSpec::Lattice { dim, p, base: None }
    }

    pub fn build(&self, budget: usize) -> Result<DiscreteSpace> {
        let space = match self {
            SpaceSpec::Lattice { dim, p, base } => {
                let norm = PNorm::from_index(*p)?;
                match base {
                    Some(b) => DiscreteSpace::lattice_at(norm, b.clone())?,
                    None => DiscreteSpace::lattice(*dim, norm)?,
                }
            }
            SpaceSpec::CayleyF2 => DiscreteSpace::cayley_f2(),
            SpaceSpec::HalfLine { n } => DiscreteSpace::half_line(*n)?,
            SpaceSpec::EdgeList { path, base } => ingest_graph(BufReader::new(File::open(path)?), *base)?,
            SpaceSpec::Percolation { dim, side, p, seed } => {
                largest_cluster(&percolate_bonds_with_budget(*dim, *side, *p, *seed, budget)?)?
            }
        };
        Ok(space.with_budget(budget))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightChoice {
    /// `1/(1 + N_k)`.
    #[default]
    Default,
    /// `(1 + ‖x‖_p)^{−d}`.
    Lattice,
    /// Explicit values per ladder level, starting at the base point.
    Profile { values: Vec<f64> },
}

impl WeightChoice {
    pub fn build(&self, space: &DiscreteSpace, ladder: &RadiiLadder) -> Result<WeightFunction> {
        match self {
            WeightChoice::Default => default_weight(ladder),
            WeightChoice::Lattice => lattice_weight(space, ladder),
            WeightChoice::Profile { values } => WeightFunction::from_profile(values.clone(), WeightProvenance::Custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let ok: SpaceSpec = serde_json::from_str(r#"{"kind":"lattice","dim":2}"#).unwrap();
        assert_eq!(ok, SpaceSpec::lattice(2, 2.0));
        assert!(serde_json::from_str::<SpaceSpec>(r#"{"kind":"lattice","dim":2,"q":1}"#).is_err());
        assert!(serde_json::from_str::<WeightChoice>(r#"{"kind":"profile","values":[1.0],"x":1}"#).is_err());
    }

    #[test]
    fn builds_f2_and_half_line() {
        assert!(SpaceSpec::CayleyF2.build(1000).is_ok());
        let s = SpaceSpec::HalfLine { n: 10 }.build(1000).unwrap();
        assert_eq!(s.ball_points(100.0).unwrap().len(), 10);
    }
}
