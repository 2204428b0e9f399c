//! Python bindings. Reports come back as plain dicts and lists.

use doslab_core::config::{SpaceSpec, WeightChoice};
use doslab_core::dos_dixmier::{self as dd, TheoremCheckOptions, DEFAULT_MARGIN};
use doslab_core::ergodic::{self, ErgodicOptions, FolnerSequence};
use doslab_core::hamiltonians::{HamiltonianSpec, Hopping, Potential};
use doslab_core::metric_spaces::{condition_c_report, default_budget, DiscreteSpace};
use doslab_core::percolation;
use doslab_core::reference_models;
use doslab_core::spectral_core::{log_cesaro, slope_dixmier_estimate, ScalarFunction};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_err(e: doslab_core::Error) -> PyErr {
    match e {
        doslab_core::Error::Eigensolver(_) | doslab_core::Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON into Python objects.
fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(module = "doslab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Space {
    inner: DiscreteSpace,
}

#[pymethods]
impl Space {
    /// ℤ^dim with the ℓ_p metric (`p = inf` for ℓ∞).
    #[staticmethod]
    #[pyo3(signature = (dim, p = 2.0))]
    fn lattice(dim: usize, p: f64) -> PyResult<Self> {
        Self::build(&SpaceSpec::lattice(dim, p))
    }

    #[staticmethod]
    fn cayley_f2() -> PyResult<Self> {
        Self::build(&SpaceSpec::CayleyF2)
    }

    #[staticmethod]
    fn half_line(n: u64) -> PyResult<Self> {
        Self::build(&SpaceSpec::HalfLine { n })
    }

    /// Component of `base` in a whitespace-separated edge list.
    #[staticmethod]
    fn from_edges(path: std::path::PathBuf, base: u64) -> PyResult<Self> {
        Self::build(&SpaceSpec::EdgeList { path, base })
    }

    /// Largest cluster of bond percolation on `{0..side-1}^dim`.
    #[staticmethod]
    fn percolation_cluster(dim: usize, side: usize, p: f64, seed: u64) -> PyResult<Self> {
        Self::build(&SpaceSpec::Percolation { dim, side, p, seed })
    }

    /// Space from a JSON descriptor such as `{"kind": "lattice", "dim": 2}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::build(&serde_json::from_str(text).map_err(json_err)?)
    }

    fn descriptor<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.descriptor())
    }

    /// Ball ladder up to `k_max` radii or up to `radius`.
    #[pyo3(signature = (k_max = None, radius = None))]
    fn ladder<'py>(&self, py: Python<'py>, k_max: Option<usize>, radius: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
        let ladder = match (k_max, radius) {
            (Some(k), _) => self.inner.radii_ladder(k),
            (None, Some(r)) => self.inner.ladder_to_radius(r),
            _ => return Err(PyValueError::new_err("give k_max or radius")),
        }
        .map_err(to_err)?;
        to_py(py, &ladder)
    }

    #[pyo3(signature = (k_max, tail_fraction = 0.2, threshold = 0.01))]
    fn check_c<'py>(&self, py: Python<'py>, k_max: usize, tail_fraction: f64, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
        let ladder = self.inner.radii_ladder(k_max).map_err(to_err)?;
        to_py(py, &condition_c_report(&ladder, tail_fraction, threshold).map_err(to_err)?)
    }

    fn __repr__(&self) -> String {
        let d = self.inner.descriptor();
        format!("Space(kind={}, base={})", d.kind, d.base_point)
    }
}

impl Space {
    fn build(spec: &SpaceSpec) -> PyResult<Self> {
        Ok(Space {
            inner: spec.build(default_budget()).map_err(to_err)?,
        })
    }
}

#[pyclass(module = "doslab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Hamiltonian {
    inner: HamiltonianSpec,
}

#[pymethods]
impl Hamiltonian {
    #[staticmethod]
    fn adjacency() -> Self {
        Hamiltonian {
            inner: HamiltonianSpec::adjacency(),
        }
    }

    #[staticmethod]
    fn laplacian() -> Self {
        Hamiltonian {
            inner: HamiltonianSpec::new(Hopping::Laplacian, Potential::Zero),
        }
    }

    #[staticmethod]
    fn zero() -> Self {
        Hamiltonian {
            inner: HamiltonianSpec::zero(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Hamiltonian {
            inner: serde_json::from_str(text).map_err(json_err)?,
        })
    }

    /// Same hopping with a periodic potential along one axis.
    fn with_periodic(&self, values: Vec<f64>) -> Self {
        let mut inner = self.inner.clone();
        inner.potential = Potential::Periodic {
            period: vec![values.len() as i64],
            values,
        };
        Hamiltonian { inner }
    }

    fn with_iid(&self, low: f64, high: f64, seed: u64) -> Self {
        let mut inner = self.inner.clone();
        inner.potential = Potential::IidUniform { low, high, seed };
        Hamiltonian { inner }
    }

    /// `U_n H U_n*`: the potential evaluated at `x − n`.
    fn shifted(&self, shift: Vec<i64>) -> Self {
        Hamiltonian {
            inner: self.inner.shifted(shift),
        }
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }
}

#[pyclass(module = "doslab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Function {
    inner: ScalarFunction,
}

#[pymethods]
impl Function {
    #[staticmethod]
    fn bump(center: f64, halfwidth: f64) -> PyResult<Self> {
        Self::checked(ScalarFunction::bump(center, halfwidth))
    }

    #[staticmethod]
    fn gaussian(center: f64, sigma: f64) -> PyResult<Self> {
        Self::checked(ScalarFunction::gaussian(center, sigma))
    }

    #[staticmethod]
    fn polynomial(coefficients: Vec<f64>) -> PyResult<Self> {
        Self::checked(ScalarFunction::Polynomial { coefficients })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::checked(serde_json::from_str(text).map_err(json_err)?)
    }

    fn __call__(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }
}

impl Function {
    fn checked(inner: ScalarFunction) -> PyResult<Self> {
        inner.validate().map_err(to_err)?;
        Ok(Function { inner })
    }
}

/// `[(radius, ball_count, ν_k(g))]`.
#[pyfunction]
#[pyo3(signature = (space, h, g, radii, margin = DEFAULT_MARGIN))]
fn dos(py: Python<'_>, space: &Space, h: &Hamiltonian, g: &Function, radii: Vec<f64>, margin: f64) -> PyResult<Vec<(f64, usize, f64)>> {
    let est = py
        .detach(|| dd::dos_approximant(&space.inner, &h.inner, &g.inner, &radii, margin))
        .map_err(to_err)?;
    Ok(est.rows.iter().map(|r| (r.radius, r.ball_count, r.value)).collect())
}

/// Sorted eigenvalues of `H` on the ball of radius `radius`.
#[pyfunction]
fn ids(py: Python<'_>, space: &Space, h: &Hamiltonian, radius: f64) -> PyResult<Vec<f64>> {
    let table = py.detach(|| dd::ids_histogram(&space.inner, &h.inner, radius)).map_err(to_err)?;
    Ok(table.energies)
}

/// Dixmier slope estimate of an arbitrary nonincreasing-modulus sequence.
#[pyfunction]
#[pyo3(signature = (values, window = None))]
fn dixmier_estimate<'py>(py: Python<'py>, values: Vec<f64>, window: Option<(usize, usize)>) -> PyResult<Bound<'py, PyAny>> {
    let series = log_cesaro(&values).map_err(to_err)?;
    to_py(py, &slope_dixmier_estimate(&series, window).map_err(to_err)?)
}

fn weight_choice(name: &str) -> PyResult<WeightChoice> {
    match name {
        "default" => Ok(WeightChoice::Default),
        "lattice" => Ok(WeightChoice::Lattice),
        _ => Err(PyValueError::new_err(format!("unknown weight `{name}`"))),
    }
}

#[pyfunction]
#[pyo3(signature = (space, h, g, radius, margin = DEFAULT_MARGIN, weight = "default"))]
fn theorem_check<'py>(
    py: Python<'py>,
    space: &Space,
    h: &Hamiltonian,
    g: &Function,
    radius: f64,
    margin: f64,
    weight: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let choice = weight_choice(weight)?;
    let check = py
        .detach(|| {
            let ladder = space.inner.ladder_to_radius(radius)?;
            let w = choice.build(&space.inner, &ladder)?;
            let options = TheoremCheckOptions {
                margin,
                ..Default::default()
            };
            dd::main_theorem_check(&space.inner, &h.inner, &g.inner, &w, radius, &options)
        })
        .map_err(to_err)?;
    to_py(py, &check)
}

#[pyfunction]
#[pyo3(signature = (m_max = 12))]
fn counterexample<'py>(py: Python<'py>, m_max: u32) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &reference_models::counterexample_report(m_max).map_err(to_err)?)
}

/// Volume of the unit ℓ_p ball in ℝ^d.
#[pyfunction]
fn vp_volume(d: usize, p: f64) -> PyResult<f64> {
    reference_models::vp_volume(d, p).map_err(to_err)
}

#[pyfunction]
fn arcsine_ids(e: f64) -> f64 {
    reference_models::arcsine_ids(e)
}

/// Chemical-ball growth table on the largest percolation cluster.
#[pyfunction]
fn chemical_growth<'py>(py: Python<'py>, dim: usize, side: usize, p: f64, seed: u64, t_max: u32) -> PyResult<Bound<'py, PyAny>> {
    let table = py
        .detach(|| {
            let sample = percolation::percolate_bonds(dim, side, p, seed)?;
            percolation::chemical_ball_growth(&percolation::largest_cluster(&sample)?, t_max)
        })
        .map_err(to_err)?;
    to_py(py, &table)
}

#[pyfunction]
fn shift_weight_gap<'py>(py: Python<'py>, space: &Space, shift: Vec<i64>, radius: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ergodic::shift_weight_gap(&space.inner, &shift, radius).map_err(to_err)?)
}

#[pyfunction]
#[pyo3(signature = (space, h, shift, g, radii, margin = DEFAULT_MARGIN))]
fn equivariance<'py>(
    py: Python<'py>,
    space: &Space,
    h: &Hamiltonian,
    shift: Vec<i64>,
    g: &Function,
    radii: Vec<f64>,
    margin: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = py
        .detach(|| ergodic::equivariance_check(&space.inner, &h.inner, &shift, &g.inner, &radii, margin))
        .map_err(to_err)?;
    to_py(py, &rep)
}

/// Følner averages over `[−half_width, half_width]^d` for `realizations` seeds.
#[pyfunction]
#[pyo3(signature = (space, h, f, half_width, realizations, seed = 0))]
fn ergodic_average<'py>(
    py: Python<'py>,
    space: &Space,
    h: &Hamiltonian,
    f: &Function,
    half_width: u64,
    realizations: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let dim = space
        .inner
        .lattice_dim()
        .ok_or_else(|| PyValueError::new_err("ergodic averages need a lattice space"))?;
    let seq = FolnerSequence::cubes(dim, vec![half_width]);
    let rep = py
        .detach(|| {
            ergodic::ergodic_average_folner(&space.inner, &h.inner, &f.inner, &seq, 0, realizations, seed, &ErgodicOptions::for_dim(dim))
        })
        .map_err(to_err)?;
    to_py(py, &rep)
}

/// Følner deviations and temperedness for `shape` in {"cube", "ball", "interval"}.
#[pyfunction]
#[pyo3(signature = (dim, shape, n_max, p = 2.0))]
fn folner_check<'py>(py: Python<'py>, dim: usize, shape: &str, n_max: usize, p: f64) -> PyResult<Bound<'py, PyAny>> {
    let schedule: Vec<u64> = (0..=n_max as u64 + 1).collect();
    let seq = match shape {
        "cube" => FolnerSequence::cubes(dim, schedule),
        "ball" => FolnerSequence::balls(dim, p, schedule),
        "interval" => FolnerSequence::dyadic_intervals(n_max as u32 + 1),
        _ => return Err(PyValueError::new_err(format!("unknown shape `{shape}`"))),
    };
    to_py(py, &ergodic::folner_tempered_check(&seq, n_max, default_budget()).map_err(to_err)?)
}

#[pymodule]
fn doslab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Space>()?;
    m.add_class::<Hamiltonian>()?;
    m.add_class::<Function>()?;
    m.add_function(wrap_pyfunction!(dos, m)?)?;
    m.add_function(wrap_pyfunction!(ids, m)?)?;
    m.add_function(wrap_pyfunction!(dixmier_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_check, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(vp_volume, m)?)?;
    m.add_function(wrap_pyfunction!(arcsine_ids, m)?)?;
    m.add_function(wrap_pyfunction!(chemical_growth, m)?)?;
    m.add_function(wrap_pyfunction!(shift_weight_gap, m)?)?;
    m.add_function(wrap_pyfunction!(equivariance, m)?)?;
    m.add_function(wrap_pyfunction!(ergodic_average, m)?)?;
    m.add_function(wrap_pyfunction!(folner_check, m)?)?;
    Ok(())
}
