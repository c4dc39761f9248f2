//! Python bindings. Reports come back as plain dicts.

use folia::conjugacy::{conjugate as conjugate_impl, BoundaryMap, ConjugacyParams};
use folia::curves::{frechet as frechet_impl, frechet_refined, mu_length as mu_length_impl, Polyline};
use folia::levelsets::level_family;
use folia::rectify::{rectify_model, DiscreteHomeomorphism, ModelChoice, RectifyParams};
use folia::regularity::{classify_with, decompose_boundary, default_boundary_samples, ClassifyParams};
use folia::report::to_json_string;
use folia::{DomainShape, Error, ScalarField, Vector2};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(folia, FoliaError, PyException);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::InvalidArgument(_) | Error::Grid(_) => PyValueError::new_err(e.to_string()),
        _ => FoliaError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize + ?Sized>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = to_json_string(value).map_err(py_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_shape(s: &str) -> PyResult<DomainShape> {
    s.parse().map_err(PyValueError::new_err)
}

fn polyline(points: Vec<(f64, f64)>) -> PyResult<Polyline> {
    Polyline::new(points.into_iter().map(|(x, y)| Vector2::new(x, y)).collect()).map_err(py_err)
}

/// A sampled scalar field on a square, half-disk or disk.
#[pyclass(frozen, name = "Field")]
struct Field {
    inner: ScalarField,
}

#[pymethods]
impl Field {
    /// `values` holds ny rows of nx samples, bottom row first.
    #[new]
    fn new(shape: &str, values: Vec<Vec<f64>>) -> PyResult<Self> {
        let ny = values.len();
        let nx = values.first().map_or(0, Vec::len);
        if values.iter().any(|r| r.len() != nx) {
            return Err(PyValueError::new_err("rows have different lengths"));
        }
        let flat = values.into_iter().flatten().collect();
        let inner = ScalarField::new(parse_shape(shape)?, nx, ny, flat, None).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: folia::load_field(path).map_err(py_err)? })
    }

    /// Writes `<stem>.json` and `<stem>.csv`; returns the manifest path.
    fn save(&self, dir: &str, stem: &str) -> PyResult<String> {
        let path = folia::save_field(&self.inner, dir, stem).map_err(py_err)?;
        Ok(path.display().to_string())
    }

    #[getter]
    fn shape(&self) -> String {
        self.inner.shape().to_string()
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx()
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    fn __call__(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.eval(Vector2::new(x, y)).map_err(py_err)
    }

    fn gradient(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let g = self.inner.gradient(Vector2::new(x, y)).map_err(py_err)?;
        Ok((g.x, g.y))
    }

    #[pyo3(signature = (tol_level=None, g_min=None))]
    fn classify<'py>(&self, py: Python<'py>, tol_level: Option<f64>, g_min: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
        let f = &self.inner;
        let tol_level = tol_level.unwrap_or_else(|| f.default_tol_level());
        let dec = decompose_boundary(f, default_boundary_samples(f), tol_level, 0.0).map_err(py_err)?;
        let params = ClassifyParams { g_min: g_min.unwrap_or_else(|| f.default_g_min()), tol_level };
        to_py(py, &classify_with(f, &dec, params))
    }

    #[pyo3(signature = (count=11))]
    fn levels<'py>(&self, py: Python<'py>, count: usize) -> PyResult<Bound<'py, PyAny>> {
        let f = &self.inner;
        let dec = decompose_boundary(f, default_boundary_samples(f), f.default_tol_level(), 0.0).map_err(py_err)?;
        to_py(py, &level_family(f, &dec, count).map_err(py_err)?)
    }

    /// `model` is one of auto, square, half_disk, disk.
    #[pyo3(signature = (model="auto", levels=65, samples=65, eps_cap=None))]
    fn rectify(&self, model: &str, levels: usize, samples: usize, eps_cap: Option<f64>) -> PyResult<Homeomorphism> {
        let model: ModelChoice = model.parse().map_err(|e: String| PyValueError::new_err(e))?;
        let params = RectifyParams { levels, samples, eps_cap, ..Default::default() };
        let inner = rectify_model(&self.inner, model, &params).map_err(py_err)?;
        Ok(Homeomorphism { inner })
    }
}

/// A homeomorphism stored as the image of a model lattice.
#[pyclass(frozen, name = "Homeomorphism")]
struct Homeomorphism {
    inner: DiscreteHomeomorphism,
}

#[pymethods]
impl Homeomorphism {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json_string(&self.inner).map_err(py_err)
    }

    #[getter]
    fn source_shape(&self) -> String {
        self.inner.source_shape.to_string()
    }

    #[getter]
    fn target_shape(&self) -> String {
        self.inner.target_shape.to_string()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn orientation_ok(&self) -> bool {
        self.inner.orientation_ok
    }

    /// The affine height `a * y + b` this map pulls back to the field.
    #[getter]
    fn affine(&self) -> (f64, f64) {
        (self.inner.a, self.inner.b)
    }

    #[getter]
    fn grid(&self) -> Vec<Vec<(f64, f64)>> {
        self.inner.grid.iter().map(|r| r.iter().map(|p| (p.x, p.y)).collect()).collect()
    }

    fn __call__(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let p = self.inner.apply(Vector2::new(x, y)).map_err(py_err)?;
        Ok((p.x, p.y))
    }

    fn apply_chart(&self, tau: f64, t: f64) -> (f64, f64) {
        let p = self.inner.apply_chart(tau, t);
        (p.x, p.y)
    }

    fn invert(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.invert().map_err(py_err)? })
    }

    fn svg(&self) -> String {
        folia::svg::render_homeomorphism(&self.inner)
    }
}

/// mu-length of a polyline; `eps` defaults to 1e-4 times its diameter.
#[pyfunction]
#[pyo3(signature = (points, eps=None))]
fn mu_length(points: Vec<(f64, f64)>, eps: Option<f64>) -> PyResult<f64> {
    let c = polyline(points)?;
    let eps = eps.unwrap_or(1e-4 * c.diameter());
    mu_length_impl(&c, eps).map_err(py_err)
}

/// Discrete Frechet distance, optionally after refining both curves.
#[pyfunction]
#[pyo3(signature = (a, b, spacing=None))]
fn frechet(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>, spacing: Option<f64>) -> PyResult<f64> {
    let (a, b) = (polyline(a)?, polyline(b)?);
    match spacing {
        Some(s) if s > 0.0 => Ok(frechet_refined(a.vertices(), b.vertices(), s)),
        Some(_) => Err(PyValueError::new_err("spacing must be positive")),
        None => Ok(frechet_impl(&a, &b)),
    }
}

/// Extends the boundary map `phi0` (pairs of boundary parameters) with
/// g(phi0) = f to a conjugacy; returns the map and its report.
#[pyfunction]
#[pyo3(signature = (f, g, phi0, levels=65, samples=65, tol_conj=None))]
fn conjugate<'py>(
    py: Python<'py>,
    f: &Field,
    g: &Field,
    phi0: Vec<(f64, f64)>,
    levels: usize,
    samples: usize,
    tol_conj: Option<f64>,
) -> PyResult<(Homeomorphism, Bound<'py, PyAny>)> {
    let phi0 = BoundaryMap::new(phi0).map_err(py_err)?;
    let params = ConjugacyParams { rectify: RectifyParams { levels, samples, ..Default::default() }, tol_conj };
    let c = conjugate_impl(&f.inner, &g.inner, &phi0, &params).map_err(py_err)?;
    let report = to_py(py, &c.report)?;
    Ok((Homeomorphism { inner: c.phi }, report))
}

#[pymodule]
#[pyo3(name = "folia")]
fn folia_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FoliaError", m.py().get_type::<FoliaError>())?;
    m.add_class::<Field>()?;
    m.add_class::<Homeomorphism>()?;
    m.add_function(wrap_pyfunction!(mu_length, m)?)?;
    m.add_function(wrap_pyfunction!(frechet, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate, m)?)?;
    Ok(())
}
