//! Python bindings. Exact rationals come back as `fractions.Fraction`,
//! big integers as Python `int`, and records as plain dicts.

use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use signlab_core::concentration::{self as conc, Method};
use signlab_core::exactcount::{self, CensusMode, CensusOptions};
use signlab_core::hyperspec::{self, ClassThresholds};
use signlab_core::montecarlo;
use signlab_core::smoothing::{self, LazyDistribution};
use signlab_core::{det, Error, Limits, Seed};

create_exception!(signlab, LimitExceeded, PyException, "A configured size cap was exceeded.");
create_exception!(signlab, CrossCheckError, PyException, "Two independent computations disagreed.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::LimitExceeded { .. } => LimitExceeded::new_err(e.to_string()),
        Error::CrossCheck(_) => CrossCheckError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn fraction<'py>(py: Python<'py>, r: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((r.numer().clone(), r.denom().clone()))
}

/// A square matrix with ±1 entries.
#[pyclass(name = "SignMatrix", frozen)]
struct PySignMatrix {
    inner: signlab_core::SignMatrix,
}

#[pymethods]
impl PySignMatrix {
    /// Builds from a list of rows of +1/-1.
    #[new]
    fn new(rows: Vec<Vec<i8>>) -> PyResult<Self> {
        let inner = signlab_core::SignMatrix::from_signs(&rows).map_err(to_py)?;
        Ok(PySignMatrix { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dim()
    }

    fn rows(&self) -> Vec<Vec<i64>> {
        self.inner.to_i64_rows()
    }

    /// Exact determinant.
    fn det(&self) -> BigInt {
        det::det_exact(&self.inner)
    }

    /// Singularity via the modular screen with an exact fallback.
    #[pyo3(signature = (seed = 0))]
    fn is_singular(&self, seed: u64) -> PyResult<bool> {
        let screen = det::PrimeScreen::draw(Seed::new(seed));
        det::is_singular_fast(&self.inner, &screen).map_err(to_py)
    }

    fn has_parallel_pair(&self) -> bool {
        self.inner.has_parallel_pair()
    }

    fn transpose(&self) -> Self {
        PySignMatrix {
            inner: self.inner.transpose(),
        }
    }

    fn __repr__(&self) -> String {
        format!("SignMatrix({:?})", self.inner.to_i64_rows())
    }
}

/// Primitive integer normal of a hyperplane (gcd 1, first nonzero entry positive).
#[pyclass(name = "NormalVector", frozen, eq, hash)]
#[derive(PartialEq, Hash)]
struct PyNormal {
    inner: signlab_core::NormalVector,
}

#[pymethods]
impl PyNormal {
    #[new]
    fn new(coeffs: Vec<BigInt>) -> PyResult<Self> {
        let inner = signlab_core::NormalVector::new(coeffs).map_err(to_py)?;
        Ok(PyNormal { inner })
    }

    /// Normal of the hyperplane spanned by n−1 sign vectors.
    #[staticmethod]
    fn from_rows(rows: Vec<Vec<i8>>) -> PyResult<Self> {
        let rows = rows
            .iter()
            .map(|r| signlab_core::SignVector::from_signs(r))
            .collect::<Result<Vec<_>, _>>()
            .map_err(to_py)?;
        let inner = signlab_core::normal_from_rows(&rows).map_err(to_py)?;
        Ok(PyNormal { inner })
    }

    #[getter]
    fn coeffs(&self) -> Vec<BigInt> {
        self.inner.coeffs().to_vec()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.dim()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("NormalVector([{}])", self.inner.to_string().replace(';', ", "))
    }
}

fn normal_arg(a: &Bound<'_, PyAny>) -> PyResult<signlab_core::NormalVector> {
    if let Ok(n) = a.cast::<PyNormal>() {
        return Ok(n.get().inner.clone());
    }
    let coeffs: Vec<BigInt> = a.extract()?;
    signlab_core::NormalVector::new(coeffs).map_err(to_py)
}

/// Exhaustive census. `mode` is "plain", "symmetric" or "auto".
#[pyfunction]
#[pyo3(signature = (n, mode = "auto", threads = 0))]
fn census<'py>(py: Python<'py>, n: usize, mode: &str, threads: usize) -> PyResult<Bound<'py, PyDict>> {
    let limits = Limits::from_env();
    let mode = match mode {
        "plain" => CensusMode::Plain,
        "symmetric" => CensusMode::SymmetryReduced,
        "auto" if n <= limits.census_plain_max_n => CensusMode::Plain,
        "auto" => CensusMode::SymmetryReduced,
        other => return Err(PyValueError::new_err(format!("unknown census mode {other:?}"))),
    };
    let opts = CensusOptions {
        threads,
        limits,
        ..CensusOptions::default()
    };
    let rec = exactcount::census(n, mode, &opts).map_err(to_py)?;
    rec.verify().map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", rec.n)?;
    d.set_item("mode", rec.mode.as_str())?;
    d.set_item("total", rec.total)?;
    d.set_item("singular", rec.singular_count)?;
    d.set_item("p_n", fraction(py, &rec.p_n())?)?;
    d.set_item("sum_det_sq", rec.sum_det_sq)?;
    d.set_item("parallel_pairs", rec.parallel_pair_count)?;
    d.set_item("det_abs_histogram", rec.det_abs_histogram.clone())?;
    Ok(d)
}

/// P(H) for the hyperplane with normal `a` by "auto", "dp", "mitm" or "fourier".
#[pyfunction]
#[pyo3(signature = (a, method = "auto", q = None))]
fn concentration<'py>(
    py: Python<'py>,
    a: &Bound<'py, PyAny>,
    method: &str,
    q: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let a = normal_arg(a)?;
    let method: Method = method.parse().map_err(to_py)?;
    let r = conc::concentration(&a, method, q, &Limits::from_env()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("normal", PyNormal { inner: r.normal })?;
    d.set_item("method", r.method.as_str())?;
    d.set_item("m_count", r.m_count)?;
    d.set_item("probability", r.probability.as_ref().map(|p| fraction(py, p)).transpose()?)?;
    d.set_item("prob_float", r.prob_float)?;
    d.set_item("q", r.modulus)?;
    Ok(d)
}

/// T(H), the Λ-restricted profile and the empirical sandwich constants.
#[pyfunction]
#[pyo3(signature = (a, eps = None, dist = None))]
fn smoothing_report<'py>(
    py: Python<'py>,
    a: &Bound<'py, PyAny>,
    eps: Option<f64>,
    dist: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let a = normal_arg(a)?;
    let dist = dist.map(LazyDistribution::parse).transpose().map_err(to_py)?.unwrap_or_default();
    let r = smoothing::sandwich_report(&a, eps, &dist, &Limits::from_env()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("normal", PyNormal { inner: r.normal.clone() })?;
    d.set_item("n", r.n)?;
    d.set_item("q", r.q)?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("p_h", fraction(py, &r.p_of_h)?)?;
    d.set_item("t_h", r.t_of_h)?;
    d.set_item("lambda_size", r.lambda_size)?;
    d.set_item("restricted_sum", r.restricted_sum)?;
    d.set_item("c1_emp", r.c1_empirical)?;
    d.set_item("c_emp", r.c_empirical)?;
    d.set_item("ok_upper", r.sandwich_ok_upper)?;
    d.set_item("ok_lower_bounds", r.ok_lower_bounds())?;
    Ok(d)
}

/// Exact T(H) for a lazy walk with step law `dist` (default "1/2,1/4").
#[pyfunction]
#[pyo3(signature = (a, dist = None))]
fn lazy_walk_zero_atom<'py>(py: Python<'py>, a: &Bound<'py, PyAny>, dist: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let a = normal_arg(a)?;
    let dist = dist.map(LazyDistribution::parse).transpose().map_err(to_py)?.unwrap_or_default();
    let t = smoothing::lazy_walk_zero_atom(&a, &dist, &Limits::from_env()).map_err(to_py)?;
    fraction(py, &t)
}

/// Sampled hyperplanes with P(H) and class, plus per-class summaries.
#[pyfunction]
#[pyo3(signature = (n, samples, seed, delta = 0.1, theta_factor = 0.5))]
fn spectrum<'py>(
    py: Python<'py>,
    n: usize,
    samples: u64,
    seed: u64,
    delta: f64,
    theta_factor: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let th = ClassThresholds::new(delta, theta_factor).map_err(to_py)?;
    let rep = hyperspec::spectrum(n, samples, Seed::new(seed), &th, &Limits::from_env()).map_err(to_py)?;
    let records = rep
        .records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("normal", PyNormal { inner: r.normal.clone() })?;
            d.set_item("p_h", fraction(py, &r.p_of_h)?)?;
            d.set_item("log2_p", r.log2_p)?;
            d.set_item("class", r.klass.as_str())?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let classes = PyDict::new(py);
    for c in &rep.classes {
        let d = PyDict::new(py);
        d.set_item("count", c.count)?;
        d.set_item("max_p", c.max_p.as_ref().map(|p| fraction(py, p)).transpose()?)?;
        d.set_item("sum_p", fraction(py, &c.sum_p)?)?;
        classes.set_item(c.klass.as_str(), d)?;
    }
    let d = PyDict::new(py);
    d.set_item("n", rep.n)?;
    d.set_item("samples", rep.samples)?;
    d.set_item("small_cutoff", rep.small_cutoff)?;
    d.set_item("large_cutoff", rep.large_cutoff)?;
    d.set_item("records", records)?;
    d.set_item("classes", classes)?;
    Ok(d)
}

/// Σ_H P(H) over the hyperplanes spanned by sign vectors, with P_n and their ratio.
#[pyfunction]
fn sum_over_hyperplanes<'py>(py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyDict>> {
    let s = hyperspec::sum_over_hyperplanes(n, &Limits::from_env()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", s.n)?;
    d.set_item("hyperplanes", s.terms.len())?;
    d.set_item("sum", fraction(py, &s.sum)?)?;
    d.set_item("sum_with_multiplicity", fraction(py, &s.sum_with_multiplicity)?)?;
    d.set_item("p_n", fraction(py, &s.p_n)?)?;
    d.set_item("ratio", fraction(py, &s.ratio)?)?;
    Ok(d)
}

/// Monte Carlo P̂_n with a 99% Wilson interval; independent of `threads`.
#[pyfunction]
#[pyo3(signature = (n, trials, seed, threads = 0))]
fn estimate_pn<'py>(py: Python<'py>, n: usize, trials: u64, seed: u64, threads: usize) -> PyResult<Bound<'py, PyDict>> {
    let e = montecarlo::estimate_pn(n, trials, Seed::new(seed), threads).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", e.n)?;
    d.set_item("trials", e.trials)?;
    d.set_item("singular_hits", e.singular_hits)?;
    d.set_item("pair_hits", e.dependent_pair_hits)?;
    d.set_item("p_hat", e.p_hat)?;
    d.set_item("ci", (e.ci_lo, e.ci_hi))?;
    d.set_item("exponent", e.exponent)?;
    d.set_item("ratio_to_bound", e.p_hat / montecarlo::conjectured_bound(e.n))?;
    Ok(d)
}

/// Exact probability that two rows or two columns agree up to sign.
#[pyfunction]
fn dependent_pair_probability(py: Python<'_>, n: usize) -> PyResult<Bound<'_, PyAny>> {
    fraction(py, &montecarlo::dependent_pair_probability(n).map_err(to_py)?)
}

/// C(n, ⌊n/2⌋)/2ⁿ.
#[pyfunction]
fn elo_ceiling(py: Python<'_>, n: usize) -> PyResult<Bound<'_, PyAny>> {
    fraction(py, &conc::elo_ceiling(n))
}

#[pymodule]
fn signlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("LimitExceeded", m.py().get_type::<LimitExceeded>())?;
    m.add("CrossCheckError", m.py().get_type::<CrossCheckError>())?;
    m.add_class::<PySignMatrix>()?;
    m.add_class::<PyNormal>()?;
    m.add_function(wrap_pyfunction!(census, m)?)?;
    m.add_function(wrap_pyfunction!(concentration, m)?)?;
    m.add_function(wrap_pyfunction!(smoothing_report, m)?)?;
    m.add_function(wrap_pyfunction!(lazy_walk_zero_atom, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(sum_over_hyperplanes, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_pn, m)?)?;
    m.add_function(wrap_pyfunction!(dependent_pair_probability, m)?)?;
    m.add_function(wrap_pyfunction!(elo_ceiling, m)?)?;
    Ok(())
}
