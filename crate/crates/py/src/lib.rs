//! Python bindings: `import pychordlab`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use chordlab::ks::{ks_for_batch, ks_p_value};
use chordlab::oracle::{oracle_check as core_oracle_check, DEFAULT_MAX_POINTS};
use chordlab::simulation::run_batch_with;
use chordlab::{DistSpec, DistanceDistribution, SimulationConfig};

fn to_py(e: chordlab::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn resolve(dist: &str) -> PyResult<(DistSpec, DistanceDistribution)> {
    let spec = DistSpec::parse(dist).map_err(to_py)?;
    let d = spec.resolve().map_err(to_py)?;
    Ok((spec, d))
}

/// A chord with left endpoint `alpha` and half angle `theta` in (0, pi/2].
#[pyclass(frozen, skip_from_py_object, name = "Chord", module = "pychordlab")]
#[derive(Clone, Copy)]
struct PyChord(chordlab::Chord);

#[pymethods]
impl PyChord {
    #[new]
    fn new(alpha: f64, theta: f64) -> PyResult<Self> {
        chordlab::Chord::new(alpha, theta).map(PyChord).map_err(to_py)
    }

    #[staticmethod]
    fn from_endpoints(a: f64, b: f64) -> PyResult<Self> {
        chordlab::Chord::from_endpoints(a, b).map(PyChord).map_err(to_py)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta()
    }

    /// Endpoint angles `(alpha, alpha + 2 theta)`, normalized to [0, 2pi).
    fn endpoints(&self) -> (f64, f64) {
        let (a, b) = self.0.endpoints();
        (a.value(), b.value())
    }

    fn cartesian(&self) -> ((f64, f64), (f64, f64)) {
        let (p, q) = self.0.to_cartesian();
        ((p.x, p.y), (q.x, q.y))
    }

    fn crosses(&self, other: &PyChord) -> bool {
        chordlab::crosses(&self.0, &other.0)
    }

    fn __repr__(&self) -> String {
        format!("Chord(alpha={}, theta={})", self.0.alpha(), self.0.theta())
    }
}

fn unwrap_chords(chords: &[PyRef<'_, PyChord>]) -> Vec<chordlab::Chord> {
    chords.iter().map(|c| c.0).collect()
}

#[pyfunction]
fn crosses(a: &PyChord, b: &PyChord) -> bool {
    chordlab::crosses(&a.0, &b.0)
}

#[pyfunction]
fn crosses_cartesian(a: &PyChord, b: &PyChord) -> bool {
    chordlab::crosses_cartesian(&a.0, &b.0)
}

#[pyfunction]
fn count_intersections(chords: Vec<PyRef<'_, PyChord>>) -> u64 {
    chordlab::count_intersections(&unwrap_chords(&chords))
}

#[pyfunction]
fn count_regions(chords: Vec<PyRef<'_, PyChord>>) -> u64 {
    chordlab::count_regions(&unwrap_chords(&chords))
}

/// `(V, E, F)` of the arrangement.
#[pyfunction]
fn euler_counts(chords: Vec<PyRef<'_, PyChord>>) -> (u64, u64, u64) {
    let c = chordlab::euler_counts(&unwrap_chords(&chords));
    (c.v, c.e, c.f)
}

/// Simulates `reps` arrangements; returns a dict with per-repetition lists
/// `r_n`, `f_n` and the sample `mean` and `std_dev` of `F_n`.
#[pyfunction]
#[pyo3(signature = (n, reps, dist = "sine", seed = 0))]
fn simulate<'py>(py: Python<'py>, n: u64, reps: u64, dist: &str, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let (spec, d) = resolve(dist)?;
    let config = SimulationConfig::new(n, reps, seed, spec);
    config.validate().map_err(to_py)?;
    let result = py.detach(|| run_batch_with(config, &d));
    let out = PyDict::new(py);
    out.set_item("r_n", result.samples.iter().map(|s| s.r_n).collect::<Vec<_>>())?;
    out.set_item("f_n", result.samples.iter().map(|s| s.f_n).collect::<Vec<_>>())?;
    out.set_item("mean", result.summary.mean)?;
    out.set_item("std_dev", result.summary.std_dev)?;
    Ok(out)
}

/// Crossing moments, plus `mean_f`, `var_r` and `sigma` when `n` is given.
#[pyfunction]
#[pyo3(signature = (dist = "sine", n = None))]
fn moments<'py>(py: Python<'py>, dist: &str, n: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
    let (_, d) = resolve(dist)?;
    let m = chordlab::moment_set(&d).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("e_a12", m.e_a12)?;
    out.set_item("e_a12a13", m.e_a12a13)?;
    if let Some(n) = n {
        let r = chordlab::region_moments(n, &m).map_err(to_py)?;
        out.set_item("mean_f", r.mean_f)?;
        out.set_item("var_r", r.var_r)?;
        out.set_item("sigma", r.sigma)?;
    }
    Ok(out)
}

#[pyfunction]
fn smooth_function_bound(n: u64, sigma: f64) -> PyResult<f64> {
    chordlab::smooth_function_bound(n, sigma).map_err(to_py)
}

#[pyfunction]
fn kolmogorov_bound(n: u64, sigma: f64) -> PyResult<f64> {
    chordlab::kolmogorov_bound(n, sigma).map_err(to_py)
}

/// One-sample KS test of already normalized samples against N(0, 1);
/// returns `(statistic, p_value)`.
#[pyfunction]
fn ks_test(samples: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = chordlab::ks_one_sample_normal(&samples).map_err(to_py)?;
    Ok((r.statistic, r.p_value))
}

/// Asymptotic p-value of a KS statistic from `m` samples.
#[pyfunction]
fn ks_pvalue(statistic: f64, m: usize) -> f64 {
    ks_p_value(statistic, m)
}

/// Simulate, normalize by the analytic mean and sigma, and KS test.
#[pyfunction]
#[pyo3(signature = (n, reps, dist = "sine", seed = 0))]
fn ks_simulated(py: Python<'_>, n: u64, reps: u64, dist: &str, seed: u64) -> PyResult<(f64, f64)> {
    let (_, d) = resolve(dist)?;
    let (r, _) = py.detach(|| ks_for_batch(&d, n, reps, seed)).map_err(to_py)?;
    Ok((r.statistic, r.p_value))
}

/// Rows `(n, reps, statistic, p_value)`.
#[pyfunction]
#[pyo3(signature = (ns, reps, dist = "sine", seed = 0))]
fn ks_table(py: Python<'_>, ns: Vec<u64>, reps: u64, dist: &str, seed: u64) -> PyResult<Vec<(u64, u64, f64, f64)>> {
    let (_, d) = resolve(dist)?;
    let rows = py.detach(|| chordlab::ks_table(&ns, reps, &d, seed)).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.n, r.reps, r.statistic, r.p_value)).collect())
}

/// Returns `(agreement_rate, violations, max_budget_used)`.
#[pyfunction]
#[pyo3(signature = (count, n_max, seed = 0, budget = DEFAULT_MAX_POINTS))]
fn oracle_check(py: Python<'_>, count: u64, n_max: u64, seed: u64, budget: u64) -> PyResult<(f64, u64, u64)> {
    let r = py.detach(|| core_oracle_check(count, n_max, seed, budget)).map_err(to_py)?;
    Ok((r.agreement_rate, r.violations, r.max_budget_used))
}

#[pymodule]
fn pychordlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", chordlab::VERSION)?;
    m.add_class::<PyChord>()?;
    m.add_function(wrap_pyfunction!(crosses, m)?)?;
    m.add_function(wrap_pyfunction!(crosses_cartesian, m)?)?;
    m.add_function(wrap_pyfunction!(count_intersections, m)?)?;
    m.add_function(wrap_pyfunction!(count_regions, m)?)?;
    m.add_function(wrap_pyfunction!(euler_counts, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_function_bound, m)?)?;
    m.add_function(wrap_pyfunction!(kolmogorov_bound, m)?)?;
    m.add_function(wrap_pyfunction!(ks_test, m)?)?;
    m.add_function(wrap_pyfunction!(ks_pvalue, m)?)?;
    m.add_function(wrap_pyfunction!(ks_simulated, m)?)?;
    m.add_function(wrap_pyfunction!(ks_table, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::IntoPyDict;

    fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyModule>)>(f: F) {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "pychordlab").unwrap();
            pychordlab(&m).unwrap();
            f(py, &m);
        });
    }

    #[test]
    fn module_exposes_core_operations() {
        with_module(|py, m| {
            let chord = m.getattr("Chord").unwrap();
            let a = chord.call1((0.0, std::f64::consts::FRAC_PI_2)).unwrap();
            let b = chord.call1((std::f64::consts::FRAC_PI_2, 0.96)).unwrap();
            let crosses: bool = m.getattr("crosses").unwrap().call1((&a, &b)).unwrap().extract().unwrap();
            assert!(crosses);
            let regions: u64 = m.getattr("count_regions").unwrap().call1((vec![a, b],)).unwrap().extract().unwrap();
            assert_eq!(regions, 4);
            let d =
                m.getattr("moments").unwrap().call(("sine",), Some(&[("n", 100)].into_py_dict(py).unwrap())).unwrap();
            let mean: f64 = d.get_item("mean_f").unwrap().extract().unwrap();
            assert_eq!(mean, 2576.0);
        });
    }

    #[test]
    fn errors_map_to_python_exceptions() {
        with_module(|py, m| {
            let err = m.getattr("Chord").unwrap().call1((0.0, 2.0)).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
            let err = m.getattr("smooth_function_bound").unwrap().call1((5, 1.0)).unwrap_err();
            assert!(err.to_string().contains("n > 5"));
        });
    }
}
