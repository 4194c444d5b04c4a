//! Python bindings: the model types, the closed-form observables, the
//! oracles and the angular scan.

use lattice_scatter::geometry::{self, ModeKind};
use lattice_scatter::observables::{self, ObservablesReport};
use lattice_scatter::oracle::{self, OracleReport, DEFAULT_CAP};
use lattice_scatter::scan::{self, OutputFormat, Preset, ScanConfig, ScanOverrides};
use lattice_scatter::{states, Complex64, Error};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "ModeSpec", module = "lattice_scatter", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModeSpec(geometry::ModeSpec);

#[pymethods]
impl PyModeSpec {
    /// `kind` is "traveling" or "standing"; `angle` in radians.
    #[new]
    fn new(kind: &str, wavelength: f64, angle: f64) -> PyResult<Self> {
        let kind: ModeKind = kind.parse().map_err(to_py)?;
        geometry::ModeSpec::new(kind, wavelength, angle).map(Self).map_err(to_py)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.0.kind() {
            ModeKind::Traveling => "traveling",
            ModeKind::Standing => "standing",
        }
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.0.wavelength()
    }

    #[getter]
    fn angle(&self) -> f64 {
        self.0.angle()
    }

    fn kx(&self) -> f64 {
        self.0.kx()
    }

    fn with_angle(&self, angle: f64) -> PyResult<Self> {
        self.0.with_angle(angle).map(Self).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("ModeSpec('{}', {}, {})", self.kind(), self.wavelength(), self.angle())
    }
}

#[pyclass(name = "LatticeGeometry", module = "lattice_scatter", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLatticeGeometry(geometry::LatticeGeometry);

#[pymethods]
impl PyLatticeGeometry {
    #[new]
    #[pyo3(signature = (sites, period, illuminated=None, first_site=1))]
    fn new(sites: usize, period: f64, illuminated: Option<usize>, first_site: usize) -> PyResult<Self> {
        geometry::LatticeGeometry::new(sites, period, illuminated.unwrap_or(sites), first_site)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn sites(&self) -> usize {
        self.0.sites()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.0.period()
    }

    #[getter]
    fn illuminated(&self) -> usize {
        self.0.illuminated()
    }

    #[getter]
    fn first_site(&self) -> usize {
        self.0.first_site()
    }
}

#[pyclass(name = "AtomicState", module = "lattice_scatter", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAtomicState(states::AtomicState);

#[pymethods]
impl PyAtomicState {
    #[staticmethod]
    fn mott(filling: u32, sites: usize) -> PyResult<Self> {
        states::AtomicState::mott(filling, sites).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn superfluid(atoms: u32, sites: usize) -> PyResult<Self> {
        states::AtomicState::superfluid(atoms, sites).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn coherent(mean_atoms: f64, sites: usize) -> PyResult<Self> {
        states::AtomicState::coherent(mean_atoms, sites).map(Self).map_err(to_py)
    }

    #[getter]
    fn sites(&self) -> usize {
        self.0.sites()
    }

    #[getter]
    fn total_atoms(&self) -> f64 {
        self.0.total_atoms()
    }

    #[getter]
    fn label(&self) -> &'static str {
        self.0.label()
    }

    /// Single-site and `k`-site window statistics as a dict.
    fn table1<'py>(&self, py: Python<'py>, k: usize) -> PyResult<Bound<'py, PyDict>> {
        let t = states::table1(&self.0, k).map_err(to_py)?;
        let d = PyDict::new(py);
        for (key, v) in [
            ("n2", t.n2),
            ("var_n", t.var_n),
            ("nk2", t.nk2),
            ("var_nk", t.var_nk),
            ("nanb", t.nanb),
            ("cov", t.cov),
        ] {
            d.set_item(key, v)?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("AtomicState({}, N={}, M={})", self.label(), self.total_atoms(), self.sites())
    }
}

#[pyclass(name = "CavityParams", module = "lattice_scatter", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCavityParams(observables::CavityParams);

#[pymethods]
impl PyCavityParams {
    #[new]
    #[pyo3(signature = (g0=1.0, a0=1.0, delta_0a=100.0, delta_01=0.0, kappa=1.0))]
    fn new(g0: f64, a0: f64, delta_0a: f64, delta_01: f64, kappa: f64) -> PyResult<Self> {
        observables::CavityParams::new(g0, a0, delta_0a, delta_01, kappa)
            .map(Self)
            .map_err(to_py)
    }

    /// Complex prefactor relating the cavity amplitude to `D`.
    #[getter]
    fn c(&self) -> Complex64 {
        self.0.c()
    }
}

#[pyclass(name = "CouplingSet", module = "lattice_scatter", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCouplingSet(geometry::CouplingSet);

#[pymethods]
impl PyCouplingSet {
    #[new]
    fn new(first_site: usize, coefficients: Vec<Complex64>) -> Self {
        Self(geometry::CouplingSet::from_coefficients(first_site, coefficients))
    }

    #[getter]
    fn coefficients(&self) -> Vec<Complex64> {
        self.0.coefficients().to_vec()
    }

    #[getter]
    fn first_site(&self) -> usize {
        self.0.first_site()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

fn report_dict<'py>(py: Python<'py>, r: &ObservablesReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("amp_d", r.amp_d)?;
    d.set_item("classical_intensity", r.classical_intensity)?;
    d.set_item("dstar_d", r.dstar_d)?;
    d.set_item("r", r.r)?;
    d.set_item("abs_d4", r.abs_d4)?;
    d.set_item("var_abs_d2", r.var_abs_d2)?;
    d.set_item("photon_number", r.photon_number)?;
    d.set_item("photon_variance", r.photon_variance)?;
    d.set_item("d2", r.d2)?;
    d.set_item("quad_variance", r.quad_variance)?;
    Ok(d)
}

fn oracle_dict<'py>(py: Python<'py>, r: &OracleReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("e_d", r.e_d)?;
    d.set_item("e_dstar_d", r.e_dstar_d)?;
    d.set_item("e_abs_d4", r.e_abs_d4)?;
    d.set_item("e_d2", r.e_d2)?;
    d.set_item("r", r.noise_r())?;
    d.set_item("count", r.count)?;
    if let Some(se) = r.stderr {
        let s = PyDict::new(py);
        s.set_item("e_d", se.e_d)?;
        s.set_item("e_dstar_d", se.e_dstar_d)?;
        s.set_item("e_abs_d4", se.e_abs_d4)?;
        s.set_item("e_d2", se.e_d2)?;
        d.set_item("stderr", s)?;
    }
    Ok(d)
}

#[pyfunction]
fn couplings(geom: &PyLatticeGeometry, probe: &PyModeSpec, detect: &PyModeSpec) -> PyCouplingSet {
    PyCouplingSet(geometry::couplings(&geom.0, &probe.0, &detect.0))
}

#[pyfunction]
fn structure_function(k: usize, alpha: f64) -> f64 {
    geometry::structure_function(k, alpha)
}

#[pyfunction]
fn alpha_minus(probe: &PyModeSpec, detect: &PyModeSpec, d: f64) -> PyResult<f64> {
    geometry::alpha_minus(&probe.0, &detect.0, d).map_err(to_py)
}

#[pyfunction]
fn expected_d(c: &PyCouplingSet, state: &PyAtomicState) -> Complex64 {
    observables::expected_d(&c.0, &state.0)
}

#[pyfunction]
fn expected_dstar_d(c: &PyCouplingSet, state: &PyAtomicState) -> f64 {
    observables::expected_dstar_d(&c.0, &state.0)
}

#[pyfunction]
fn noise_r(c: &PyCouplingSet, state: &PyAtomicState) -> f64 {
    observables::noise_r(&c.0, &state.0)
}

#[pyfunction]
fn noise_r_traveling(state: &PyAtomicState, k: usize, alpha: f64) -> f64 {
    observables::noise_r_traveling(&state.0, k, alpha)
}

/// `<|D|⁴>`; `reference=True` uses the direct quadruple sum.
#[pyfunction]
#[pyo3(signature = (c, state, reference=false))]
fn fourth_moment(c: &PyCouplingSet, state: &PyAtomicState, reference: bool) -> f64 {
    if reference {
        observables::fourth_moment_abs_d4_reference(&c.0, &state.0)
    } else {
        observables::fourth_moment_abs_d4(&c.0, &state.0)
    }
}

#[pyfunction]
#[pyo3(signature = (c, state, cavity=None, phi=0.0))]
fn evaluate<'py>(
    py: Python<'py>,
    c: &PyCouplingSet,
    state: &PyAtomicState,
    cavity: Option<&PyCavityParams>,
    phi: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = cavity.map(|p| p.0).unwrap_or_default();
    report_dict(py, &observables::evaluate(&c.0, &state.0, &p, phi))
}

#[pyfunction]
#[pyo3(signature = (state, k, cavity=None))]
fn preset_transverse<'py>(
    py: Python<'py>,
    state: &PyAtomicState,
    k: usize,
    cavity: Option<&PyCavityParams>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = cavity.map(|p| p.0).unwrap_or_default();
    let r = observables::preset_transverse(&state.0, &p, k).map_err(to_py)?;
    report_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (nk, cavity=None))]
fn preset_self_organized(nk: f64, cavity: Option<&PyCavityParams>) -> f64 {
    observables::preset_self_organized(&cavity.map(|p| p.0).unwrap_or_default(), nk)
}

#[pyfunction]
#[pyo3(signature = (state, c, cap=DEFAULT_CAP))]
fn exact_expectations<'py>(
    py: Python<'py>,
    state: &PyAtomicState,
    c: &PyCouplingSet,
    cap: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let (s, cs) = (state.0.clone(), c.0.clone());
    let r = py.detach(|| oracle::exact_expectations(&s, &cs, cap)).map_err(to_py)?;
    oracle_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (state, c, samples, seed=0))]
fn mc_expectations<'py>(
    py: Python<'py>,
    state: &PyAtomicState,
    c: &PyCouplingSet,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let (s, cs) = (state.0.clone(), c.0.clone());
    let r = py.detach(|| oracle::mc_expectations(&s, &cs, samples, seed)).map_err(to_py)?;
    oracle_dict(py, &r)
}

fn scan_config(py: Python<'_>, preset: Option<&str>, options: Option<&Bound<'_, PyDict>>) -> PyResult<ScanConfig> {
    let mut cfg = match preset {
        None => ScanConfig::default(),
        Some("fig2") => Preset::Fig2.config(),
        Some("fig2c") => Preset::Fig2c.config(),
        Some("fig3") => Preset::Fig3.config(),
        Some(other) => return Err(PyValueError::new_err(format!("unknown preset '{other}'"))),
    };
    if let Some(opts) = options {
        let text: String = py.import("json")?.call_method1("dumps", (opts,))?.extract()?;
        let overrides: ScanOverrides =
            serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        overrides.apply(&mut cfg);
    }
    Ok(cfg)
}

/// Angular scan. Keyword options use the config-file keys (`state`, `N`,
/// `M`, `K`, `points`, `mc`, ...). Returns a list of row dicts.
#[pyfunction]
#[pyo3(signature = (preset=None, **options))]
fn run_scan<'py>(
    py: Python<'py>,
    preset: Option<&str>,
    options: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = scan_config(py, preset, options)?;
    let rows = py.detach(|| scan::run_scan(&cfg)).map_err(to_py)?;
    let mut buf = Vec::new();
    scan::write_rows(&rows, OutputFormat::Json, &mut buf).map_err(|e| PyOSError::new_err(e.to_string()))?;
    json_to_py(py, std::str::from_utf8(&buf).expect("JSON is UTF-8"))
}

/// Closed forms against the oracle over a scan grid. Returns
/// `(passed, report_text)`.
#[pyfunction]
#[pyo3(signature = (preset=None, **options))]
fn run_check(py: Python<'_>, preset: Option<&str>, options: Option<&Bound<'_, PyDict>>) -> PyResult<(bool, String)> {
    let cfg = scan_config(py, preset, options)?;
    let report = py.detach(|| scan::run_oracle_check(&cfg)).map_err(to_py)?;
    Ok((report.passed(), report.to_string()))
}

#[pyfunction]
fn theta_grid<'py>(py: Python<'py>, start: f64, stop: f64, points: usize) -> PyResult<Bound<'py, PyList>> {
    if points < 2 {
        return Err(PyValueError::new_err("need at least 2 grid points"));
    }
    PyList::new(py, scan::theta_grid(start, stop, points))
}

#[pymodule(name = "lattice_scatter")]
fn lattice_scatter_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModeSpec>()?;
    m.add_class::<PyLatticeGeometry>()?;
    m.add_class::<PyAtomicState>()?;
    m.add_class::<PyCavityParams>()?;
    m.add_class::<PyCouplingSet>()?;
    m.add_function(wrap_pyfunction!(couplings, m)?)?;
    m.add_function(wrap_pyfunction!(structure_function, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_minus, m)?)?;
    m.add_function(wrap_pyfunction!(expected_d, m)?)?;
    m.add_function(wrap_pyfunction!(expected_dstar_d, m)?)?;
    m.add_function(wrap_pyfunction!(noise_r, m)?)?;
    m.add_function(wrap_pyfunction!(noise_r_traveling, m)?)?;
    m.add_function(wrap_pyfunction!(fourth_moment, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(preset_transverse, m)?)?;
    m.add_function(wrap_pyfunction!(preset_self_organized, m)?)?;
    m.add_function(wrap_pyfunction!(exact_expectations, m)?)?;
    m.add_function(wrap_pyfunction!(mc_expectations, m)?)?;
    m.add_function(wrap_pyfunction!(run_scan, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    m.add_function(wrap_pyfunction!(theta_grid, m)?)?;
    Ok(())
}
