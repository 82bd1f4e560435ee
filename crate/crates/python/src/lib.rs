//! Python module `eigenbound`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use eigenbound::cutoff;
use eigenbound::fem::{assemble, MassKind};
use eigenbound::geometry;
use eigenbound::holomorphic::{self, DegreeNumerator};
use eigenbound::mesh::{self, TriangulatedSurface};
use eigenbound::packing::{self, PackingOptions, WeightedPointCloud};
use eigenbound::spectra;
use eigenbound::verify::{self, ExperimentConfig};
use eigenbound::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NoConvergence(_) | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A point of `CP^m` in homogeneous coordinates.
#[pyclass(name = "ProjectivePoint", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPoint(geometry::ProjectivePoint);

#[pymethods]
impl PyPoint {
    #[new]
    fn new(coords: Vec<Complex64>) -> PyResult<Self> {
        geometry::ProjectivePoint::new(coords).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (m, seed=0))]
    fn random(m: usize, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Self(geometry::ProjectivePoint::random(m, &mut rng))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn coords(&self) -> Vec<Complex64> {
        self.0.coords().to_vec()
    }

    fn distance(&self, other: &PyPoint) -> PyResult<f64> {
        geometry::fs_distance(&self.0, &other.0).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let c: Vec<String> = self.0.coords().iter().map(|z| format!("{z}")).collect();
        format!("ProjectivePoint([{}])", c.join(", "))
    }
}

#[pyfunction]
fn fs_distance(p: &PyPoint, q: &PyPoint) -> PyResult<f64> {
    geometry::fs_distance(&p.0, &q.0).map_err(py_err)
}

/// `i ZZ*/|Z|²` as nested lists.
#[pyfunction]
fn moment_map(p: &PyPoint) -> Vec<Vec<Complex64>> {
    let t = geometry::moment_map(&p.0).0;
    (0..t.nrows()).map(|i| (0..t.ncols()).map(|j| t[(i, j)]).collect()).collect()
}

#[pyfunction]
fn model_eigenfunction(w: &PyPoint, p: &PyPoint) -> PyResult<f64> {
    geometry::model_eigenfunction(&w.0, &p.0).map_err(py_err)
}

#[pyfunction]
fn theta_flow(t: f64, w: &PyPoint, p: &PyPoint) -> PyResult<PyPoint> {
    geometry::theta_flow(t, &w.0, &p.0).map(PyPoint).map_err(py_err)
}

#[pyfunction]
fn ball_image_radius(t: f64, r: f64) -> PyResult<f64> {
    geometry::ball_image_radius(t, r).map_err(py_err)
}

#[pyclass(name = "Annulus", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAnnulus(cutoff::Annulus);

#[pymethods]
impl PyAnnulus {
    #[new]
    fn new(center: &PyPoint, inner: f64, outer: f64) -> PyResult<Self> {
        cutoff::Annulus::new(center.0.clone(), inner, outer).map(Self).map_err(py_err)
    }

    #[getter]
    fn center(&self) -> PyPoint {
        PyPoint(self.0.center.clone())
    }

    #[getter]
    fn inner(&self) -> f64 {
        self.0.inner
    }

    #[getter]
    fn outer(&self) -> f64 {
        self.0.outer
    }

    fn doubled(&self) -> Self {
        Self(self.0.doubled())
    }

    fn cutoff(&self, p: &PyPoint) -> PyResult<f64> {
        cutoff::annulus_cutoff(&self.0, &p.0).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Annulus(inner={}, outer={})", self.0.inner, self.0.outer)
    }
}

#[pyfunction]
fn psi(outer: f64, w: &PyPoint, p: &PyPoint) -> PyResult<f64> {
    cutoff::psi(outer, &w.0, &p.0).map_err(py_err)
}

#[pyfunction]
fn psi_bar(inner: f64, w: &PyPoint, p: &PyPoint) -> PyResult<f64> {
    cutoff::psi_bar(inner, &w.0, &p.0).map_err(py_err)
}

/// A triangulated surface with a per-vertex conformal factor.
#[pyclass(name = "Mesh", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh(TriangulatedSurface);

#[pymethods]
impl PyMesh {
    #[staticmethod]
    #[pyo3(signature = (level, radius=0.5))]
    fn icosphere(level: u32, radius: f64) -> PyResult<Self> {
        mesh::icosphere(level, radius).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (nx, ny, lx=1.0, ly=1.0))]
    fn flat_torus(nx: usize, ny: usize, lx: f64, ly: f64) -> PyResult<Self> {
        mesh::flat_torus(nx, ny, lx, ly).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        mesh::load_mesh(&path).map(Self).map_err(py_err)
    }

    #[pyo3(signature = (seed, bandwidth=3, amplitude=0.5))]
    fn bumpy(&self, seed: u64, bandwidth: u32, amplitude: f64) -> PyResult<Self> {
        let factor = mesh::bumpy_conformal_factor(&self.0, seed, bandwidth, amplitude).map_err(py_err)?;
        self.0.clone().with_conformal_factor(factor).map(Self).map_err(py_err)
    }

    fn scale_conformal(&self, s: f64) -> PyResult<Self> {
        self.0.clone().scale_conformal(s).map(Self).map_err(py_err)
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertex_count()
    }

    #[getter]
    fn genus(&self) -> usize {
        self.0.genus()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.0.area()
    }

    #[getter]
    fn conformal_factor(&self) -> Vec<f64> {
        self.0.conformal_factor().to_vec()
    }

    /// Smallest `count` eigenvalues of the Laplacian, starting with zero.
    #[pyo3(signature = (count, lumped=false))]
    fn eigenvalues(&self, count: usize, lumped: bool) -> PyResult<Vec<f64>> {
        let kind = if lumped { MassKind::Lumped } else { MassKind::Consistent };
        let (s, m) = assemble(&self.0, kind).map_err(py_err)?;
        spectra::spectrum(&s, &m, count).map(|d| d.eigenvalues).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, genus={})", self.0.vertex_count(), self.0.genus())
    }
}

/// A holomorphic map `CP^1 → CP^m` given by homogeneous polynomials.
#[pyclass(name = "RationalMap", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMap(holomorphic::RationalCurveMap);

#[pymethods]
impl PyMap {
    #[new]
    fn new(components: Vec<Vec<Complex64>>) -> PyResult<Self> {
        holomorphic::RationalCurveMap::new(components).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn identity() -> Self {
        Self(holomorphic::RationalCurveMap::identity())
    }

    #[staticmethod]
    fn monomial(degree: usize) -> Self {
        Self(holomorphic::RationalCurveMap::monomial_power(degree))
    }

    #[staticmethod]
    fn veronese(degree: usize) -> Self {
        Self(holomorphic::RationalCurveMap::veronese(degree))
    }

    #[staticmethod]
    #[pyo3(signature = (m, degree, seed=0))]
    fn random(m: usize, degree: usize, seed: u64) -> PyResult<Self> {
        holomorphic::RationalCurveMap::random(m, degree, seed).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        holomorphic::RationalCurveMap::from_json(text).map(Self).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(py_err)
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    #[getter]
    fn target_dim(&self) -> usize {
        self.0.target_dim()
    }

    fn __call__(&self, p: &PyPoint) -> PyResult<PyPoint> {
        self.0.evaluate(&p.0).map(PyPoint).map_err(py_err)
    }
}

#[pyfunction]
fn pullback_area(map: &PyMap, mesh: &PyMesh) -> PyResult<f64> {
    holomorphic::pullback_area(&map.0, &mesh.0).map_err(py_err)
}

/// `d([φ],[ω_g])`, with the exact numerator `deg·π` unless `exact` is false.
#[pyfunction]
#[pyo3(signature = (map, mesh, exact=true))]
fn holomorphic_degree(map: &PyMap, mesh: &PyMesh, exact: bool) -> PyResult<f64> {
    let numerator = if exact { DegreeNumerator::Exact } else { DegreeNumerator::Discrete };
    holomorphic::holomorphic_degree(&map.0, &mesh.0, numerator)
        .map(|d| d.value)
        .map_err(py_err)
}

#[pyfunction]
fn weyl_slope(eigenvalues: Vec<f64>, area: f64) -> PyResult<f64> {
    spectra::weyl_slope_from(&eigenvalues, area).map_err(py_err)
}

/// Packs `k` annuli; returns `(annuli, measures, achieved_fraction, satisfied)`.
#[pyfunction]
#[pyo3(signature = (points, weights, k, c_target=0.01, seed=0))]
fn pack_annuli(
    points: Vec<PyRef<'_, PyPoint>>,
    weights: Vec<f64>,
    k: usize,
    c_target: f64,
    seed: u64,
) -> PyResult<(Vec<PyAnnulus>, Vec<f64>, f64, bool)> {
    let cloud = WeightedPointCloud::new(points.iter().map(|p| p.0.clone()).collect(), weights).map_err(py_err)?;
    let opts = PackingOptions { seed, ..PackingOptions::default() };
    let r = packing::pack_annuli_with(&cloud, k, c_target, &opts).map_err(py_err)?;
    let annuli = r.annuli.iter().cloned().map(PyAnnulus).collect();
    Ok((annuli, r.measures, r.achieved_fraction, r.satisfied))
}

/// Runs a subcommand on a TOML configuration and returns the report JSON.
#[pyfunction]
#[pyo3(signature = (command, config_toml=""))]
fn run(py: Python<'_>, command: &str, config_toml: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(config_toml).map_err(py_err)?;
    let command = command.to_owned();
    let report = py
        .detach(move || match command.as_str() {
            "geometry-suite" => verify::geometry_suite(&cfg.suite, cfg.seed),
            "bly-check" => verify::bly_check(&cfg),
            "eigenfunction-check" => verify::eigenfunction_check(&cfg),
            "certify" => verify::certify(&cfg),
            "korevaar-sweep" => verify::korevaar_sweep(&cfg),
            "weyl" => verify::weyl(&cfg),
            other => Err(Error::Config(format!("unknown command '{other}'"))),
        })
        .map_err(py_err)?;
    report.to_json().map_err(py_err)
}

#[pymodule(name = "eigenbound")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPoint>()?;
    m.add_class::<PyAnnulus>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyMap>()?;
    m.add_function(wrap_pyfunction!(fs_distance, m)?)?;
    m.add_function(wrap_pyfunction!(moment_map, m)?)?;
    m.add_function(wrap_pyfunction!(model_eigenfunction, m)?)?;
    m.add_function(wrap_pyfunction!(theta_flow, m)?)?;
    m.add_function(wrap_pyfunction!(ball_image_radius, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(psi_bar, m)?)?;
    m.add_function(wrap_pyfunction!(pullback_area, m)?)?;
    m.add_function(wrap_pyfunction!(holomorphic_degree, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_slope, m)?)?;
    m.add_function(wrap_pyfunction!(pack_annuli, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
