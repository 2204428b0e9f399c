//! Shorthand flag values. Anything starting with `{` is parsed as JSON.

use std::path::PathBuf;

use doslab_core::config::{SpaceSpec, WeightChoice};
use doslab_core::hamiltonians::{HamiltonianSpec, Hopping, Potential};
use doslab_core::spectral_core::ScalarFunction;
use serde::de::DeserializeOwned;

fn json<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_str(s).map_err(|e| format!("bad JSON `{s}`: {e}"))
}

fn num(s: &str) -> Result<f64, String> {
    s.trim().parse().map_err(|_| format!("`{s}` is not a number"))
}

pub fn list_f64(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(num).collect()
}

pub fn list_i64(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("`{v}` is not an integer")))
        .collect()
}

fn norm_index(s: &str) -> Result<f64, String> {
    match s {
        "l1" => Ok(1.0),
        "l2" => Ok(2.0),
        "linf" | "inf" => Ok(f64::INFINITY),
        other => num(other.trim_start_matches('l')),
    }
}

/// `z2`, `z3:l1`, `z2:linf`, `f2`, `half-line:100`, `edges:PATH:BASE`,
/// `perc:D:L:P:SEED`.
pub fn space(s: &str) -> Result<SpaceSpec, String> {
    if s.starts_with('{') {
        return json(s);
    }
    if s == "f2" {
        return Ok(SpaceSpec::CayleyF2);
    }
    if let Some(n) = s.strip_prefix("half-line:") {
        return Ok(SpaceSpec::HalfLine {
            n: n.parse().map_err(|_| format!("bad half-line length `{n}`"))?,
        });
    }
    if let Some(rest) = s.strip_prefix("edges:") {
        let (path, base) = rest.rsplit_once(':').ok_or("expected edges:PATH:BASE")?;
        return Ok(SpaceSpec::EdgeList {
            path: PathBuf::from(path),
            base: base.parse().map_err(|_| format!("bad base node `{base}`"))?,
        });
    }
    if let Some(rest) = s.strip_prefix("perc:") {
        let f: Vec<&str> = rest.split(':').collect();
        if f.len() != 4 {
            return Err("expected perc:D:L:P:SEED".into());
        }
        let int = |v: &str| v.parse::<u64>().map_err(|_| format!("`{v}` is not an integer"));
        return Ok(SpaceSpec::Percolation {
            dim: int(f[0])? as usize,
            side: int(f[1])? as usize,
            p: num(f[2])?,
            seed: int(f[3])?,
        });
    }
    if let Some(rest) = s.strip_prefix('z') {
        let (d, p) = rest.split_once(':').unwrap_or((rest, "l2"));
        let dim = d.parse().map_err(|_| format!("bad dimension in `{s}`"))?;
        return Ok(SpaceSpec::lattice(dim, norm_index(p)?));
    }
    Err(format!("unknown space `{s}`"))
}

/// `bump:C:H`, `gaussian:C:S`, `poly:A,B,C`, `identity`.
pub fn function(s: &str) -> Result<ScalarFunction, String> {
    if s.starts_with('{') {
        return json(s);
    }
    if s == "identity" {
        return Ok(ScalarFunction::identity());
    }
    let (kind, args) = s.split_once(':').ok_or_else(|| format!("unknown function `{s}`"))?;
    let two = |a: &str| -> Result<(f64, f64), String> {
        let (x, y) = a.split_once(':').ok_or_else(|| format!("`{s}` needs two parameters"))?;
        Ok((num(x)?, num(y)?))
    };
    let g = match kind {
        "bump" => {
            let (c, h) = two(args)?;
            ScalarFunction::bump(c, h)
        }
        "gaussian" => {
            let (c, w) = two(args)?;
            ScalarFunction::gaussian(c, w)
        }
        "poly" => ScalarFunction::Polynomial {
            coefficients: list_f64(args)?,
        },
        _ => return Err(format!("unknown function `{s}`")),
    };
    g.validate().map_err(|e| e.to_string())?;
    Ok(g)
}

/// `HOPPING[+POTENTIAL]`: hopping is `adjacency`, `laplacian` or `none`;
/// potential is `periodic:V0,V1,…` (one axis), `iid:LOW,HIGH` or
/// `counterexample`.
pub fn hamiltonian(s: &str) -> Result<HamiltonianSpec, String> {
    if s.starts_with('{') {
        return json(s);
    }
    let (h, v) = s.split_once('+').unwrap_or((s, ""));
    let hopping = match h {
        "adjacency" => Hopping::Adjacency,
        "laplacian" => Hopping::Laplacian,
        "none" | "zero" => Hopping::None,
        _ => return Err(format!("unknown hopping `{h}`")),
    };
    let potential = if v.is_empty() {
        Potential::Zero
    } else if v == "counterexample" {
        Potential::Counterexample
    } else if let Some(vals) = v.strip_prefix("periodic:") {
        let values = list_f64(vals)?;
        Potential::Periodic {
            period: vec![values.len() as i64],
            values,
        }
    } else if let Some(b) = v.strip_prefix("iid:") {
        let lh = list_f64(b)?;
        if lh.len() != 2 {
            return Err("expected iid:LOW,HIGH".into());
        }
        Potential::IidUniform {
            low: lh[0],
            high: lh[1],
            seed: 0,
        }
    } else {
        return Err(format!("unknown potential `{v}`"));
    };
    Ok(HamiltonianSpec::new(hopping, potential))
}

pub fn weight(s: &str) -> Result<WeightChoice, String> {
    match s {
        "default" => Ok(WeightChoice::Default),
        "lattice" => Ok(WeightChoice::Lattice),
        _ if s.starts_with('{') => json(s),
        _ => Err(format!("unknown weight `{s}`")),
    }
}
