//! Python module `mtl`: points are lists of coordinate lists, and failures
//! raise `ValueError` (or its subclass `NotCyclicallyMonotone`, which
//! carries the violating cycle and its deficit).

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use mtl_core::convergence::{run_consistency_experiment_with_threads, ExperimentConfig};
use mtl_core::geometry::{hausdorff_distance, PointCloud, SetDescriptor};
use mtl_core::io::{from_json, to_canonical_json};
use mtl_core::monotone::{self, MaxAffinePotential, PairSet, DEFAULT_TOL};
use mtl_core::transport::{self, DiscreteMeasure, SUPPORT_FLOOR};
use mtl_core::{ranks, Error};

create_exception!(mtl, NotCyclicallyMonotone, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotCyclicallyMonotone(v) => {
            let w = v.witness.expect("failed verdicts carry a witness");
            let msg = format!("pair set is not cyclically monotone (cycle {:?}, deficit {:e})", w.cycle, w.deficit);
            NotCyclicallyMonotone::new_err((msg, w.cycle, w.deficit))
        }
        Error::Internal(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn cloud(rows: &[Vec<f64>]) -> PyResult<PointCloud> {
    let dim = rows.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(PyValueError::new_err("expected a non-empty list of non-empty points"));
    }
    PointCloud::from_rows(dim, rows).map_err(to_py)
}

fn measure(points: &[Vec<f64>], weights: Option<Vec<f64>>) -> PyResult<DiscreteMeasure> {
    let c = cloud(points)?;
    match weights {
        Some(w) => DiscreteMeasure::new(c, w),
        None => DiscreteMeasure::uniform(c),
    }
    .map_err(to_py)
}

fn pairs(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> PyResult<PairSet> {
    PairSet::new(cloud(xs)?, cloud(ys)?).map_err(to_py)
}

/// Outcome of a monotonicity check.
#[pyclass(frozen, get_all)]
pub struct Verdict {
    pub holds: bool,
    /// Violating cycle of pair indices, when the check fails.
    pub cycle: Option<Vec<usize>>,
    /// Cyclic sum of the violating cycle (negative).
    pub deficit: Option<f64>,
}

#[pymethods]
impl Verdict {
    fn __bool__(&self) -> bool {
        self.holds
    }

    fn __repr__(&self) -> String {
        match (&self.cycle, self.deficit) {
            (Some(c), Some(d)) => format!("Verdict(holds=False, cycle={c:?}, deficit={d:e})"),
            _ => "Verdict(holds=True)".into(),
        }
    }
}

impl From<monotone::MonotoneVerdict> for Verdict {
    fn from(v: monotone::MonotoneVerdict) -> Self {
        Verdict {
            holds: v.holds,
            cycle: v.witness.as_ref().map(|w| w.cycle.clone()),
            deficit: v.witness.map(|w| w.deficit),
        }
    }
}

/// Optimal plan between two discrete measures.
#[pyclass(frozen)]
pub struct Coupling(transport::Coupling);

#[pymethods]
impl Coupling {
    #[getter]
    fn cost(&self) -> f64 {
        self.0.cost()
    }

    /// `(i, j, mass)` entries with positive mass.
    #[getter]
    fn plan(&self) -> Vec<(usize, usize, f64)> {
        self.0.entries().to_vec()
    }

    #[getter]
    fn margin_error(&self) -> f64 {
        self.0.margin_error()
    }

    /// Source and target points of the plan's support, row-aligned.
    fn support(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let s = transport::coupling_support(&self.0, SUPPORT_FLOOR);
        (s.xs().to_rows(), s.ys().to_rows())
    }

    fn __repr__(&self) -> String {
        format!("Coupling(cost={:e}, entries={})", self.0.cost(), self.0.entries().len())
    }
}

/// Convex potential `psi(x) = max_i (<slope_i, x> - intercept_i)`.
#[pyclass(frozen)]
pub struct Potential(MaxAffinePotential);

#[pymethods]
impl Potential {
    #[new]
    #[pyo3(signature = (slopes, intercepts, base_index = 0))]
    fn new(slopes: Vec<Vec<f64>>, intercepts: Vec<f64>, base_index: usize) -> PyResult<Self> {
        MaxAffinePotential::new(cloud(&slopes)?, intercepts, base_index).map(Potential).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn slopes(&self) -> Vec<Vec<f64>> {
        self.0.slopes().to_rows()
    }

    #[getter]
    fn intercepts(&self) -> Vec<f64> {
        self.0.intercepts().to_vec()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.value(&x).map_err(to_py)
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.value(x)
    }

    /// Vertices of the subdifferential at `x`.
    #[pyo3(signature = (x, tol = DEFAULT_TOL))]
    fn subdifferential(&self, x: Vec<f64>, tol: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(monotone::eval_subdifferential(&self.0, &x, tol).map_err(to_py)?.vertices.to_rows())
    }

    fn to_json(&self) -> PyResult<String> {
        to_canonical_json(&self.0).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        from_json(text).map(Potential).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Potential(dim={}, pieces={})", self.0.dim(), self.0.len())
    }
}

/// Center-outward ranks of a sample.
#[pyclass(frozen, get_all)]
pub struct Ranks {
    /// `assignment[i]` is the grid index matched to sample point `i`.
    pub assignment: Vec<usize>,
    pub grid: Vec<Vec<f64>>,
    /// Ring of each grid point; 0 for origin copies.
    pub rings: Vec<usize>,
    pub cost: f64,
    pub certified: bool,
}

/// Optimal coupling of two discrete measures; uniform weights by default.
#[pyfunction]
#[pyo3(signature = (source, target, source_weights = None, target_weights = None))]
pub fn solve_ot(
    source: Vec<Vec<f64>>,
    target: Vec<Vec<f64>>,
    source_weights: Option<Vec<f64>>,
    target_weights: Option<Vec<f64>>,
) -> PyResult<Coupling> {
    let p = measure(&source, source_weights)?;
    let q = measure(&target, target_weights)?;
    transport::solve_discrete_ot(&p, &q).map(Coupling).map_err(to_py)
}

/// Enumerates permutation plans; both measures uniform with at most 8 points.
#[pyfunction]
pub fn brute_force_ot(source: Vec<Vec<f64>>, target: Vec<Vec<f64>>) -> PyResult<Coupling> {
    transport::brute_force_ot(&measure(&source, None)?, &measure(&target, None)?).map(Coupling).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (xs, ys, tol = DEFAULT_TOL))]
pub fn is_cyclically_monotone(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>, tol: f64) -> PyResult<Verdict> {
    Ok(monotone::is_cyclically_monotone(&pairs(&xs, &ys)?, tol).into())
}

#[pyfunction]
#[pyo3(signature = (xs, ys, tol = DEFAULT_TOL))]
pub fn is_monotone(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>, tol: f64) -> PyResult<Verdict> {
    Ok(monotone::is_monotone(&pairs(&xs, &ys)?, tol).into())
}

/// Largest convex potential whose subdifferential contains every pair.
#[pyfunction]
#[pyo3(signature = (xs, ys, base = 0, tol = DEFAULT_TOL))]
pub fn rockafellar_potential(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>, base: usize, tol: f64) -> PyResult<Potential> {
    let s = pairs(&xs, &ys)?;
    if base >= s.len() {
        return Err(PyValueError::new_err(format!("base {base} out of range for {} pairs", s.len())));
    }
    monotone::rockafellar_potential_with_tol(&s, base, tol).map(Potential).map_err(to_py)
}

#[pyfunction]
pub fn hausdorff(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    hausdorff_distance(&cloud(&a)?, &cloud(&b)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (sample, n_r, n_s, n_0 = 0, seed = 0))]
pub fn center_outward_ranks(sample: Vec<Vec<f64>>, n_r: usize, n_s: usize, n_0: usize, seed: u64) -> PyResult<Ranks> {
    let xs = cloud(&sample)?;
    let grid = ranks::center_outward_grid(n_r, n_s, n_0, xs.dim(), seed).map_err(to_py)?;
    let a = ranks::center_outward_ranks(&xs, &grid).map_err(to_py)?;
    Ok(Ranks {
        rings: (0..grid.len()).map(|g| grid.ring_of(g)).collect(),
        grid: grid.points().to_rows(),
        assignment: a.assignment,
        cost: a.cost,
        certified: a.certified,
    })
}

/// Lattice points of a set descriptor given as JSON.
#[pyfunction]
pub fn grid_points(set_json: &str, resolution: usize) -> PyResult<Vec<Vec<f64>>> {
    let set: SetDescriptor = from_json(set_json).map_err(to_py)?;
    set.validate().map_err(to_py)?;
    Ok(set.grid_points(resolution).map_err(to_py)?.to_rows())
}

/// Runs a consistency experiment from its JSON config and returns the
/// canonical JSON report. `threads = 0` uses one worker per core.
#[pyfunction]
#[pyo3(signature = (config_json, threads = 0))]
pub fn run_experiment(py: Python<'_>, config_json: &str, threads: usize) -> PyResult<String> {
    let cfg: ExperimentConfig = from_json(config_json).map_err(to_py)?;
    let report = py.detach(|| run_consistency_experiment_with_threads(&cfg, threads)).map_err(to_py)?;
    to_canonical_json(&report).map_err(to_py)
}

#[pymodule]
pub fn mtl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("NotCyclicallyMonotone", m.py().get_type::<NotCyclicallyMonotone>())?;
    m.add_class::<Verdict>()?;
    m.add_class::<Coupling>()?;
    m.add_class::<Potential>()?;
    m.add_class::<Ranks>()?;
    m.add_function(wrap_pyfunction!(solve_ot, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_ot, m)?)?;
    m.add_function(wrap_pyfunction!(is_cyclically_monotone, m)?)?;
    m.add_function(wrap_pyfunction!(is_monotone, m)?)?;
    m.add_function(wrap_pyfunction!(rockafellar_potential, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(center_outward_ranks, m)?)?;
    m.add_function(wrap_pyfunction!(grid_points, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
