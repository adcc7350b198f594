use ndarray::Array2;
use num_complex::Complex64 as C64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use qtomo_core::evolution::{self as ev, DrivenHarmonic, EvolutionConfig};
use qtomo_core::io::QtgArray;
use qtomo_core::oscillator::{self as osc, DEFAULT_TOL};
use qtomo_core::phasespace::{self as ps, Tag};
use qtomo_core::schemes::SymmetrizationScheme;
use qtomo_core::tomography as tomo;
use qtomo_core::{GridSpec, PhaseGrid};

create_exception!(qtomo, QtomoError, PyException);

fn err(e: qtomo_core::Error) -> PyErr {
    QtomoError::new_err(e.to_string())
}

fn rows(a: &Array2<C64>) -> Vec<Vec<C64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn tag_str(t: &Tag) -> String {
    t.to_string()
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(GridSpec);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(min: f64, max: f64, count: usize) -> PyResult<Self> {
        GridSpec::new(min, max, count).map(Self).map_err(err)
    }

    #[staticmethod]
    fn symmetric(half_width: f64, count: usize) -> PyResult<Self> {
        GridSpec::symmetric(half_width, count)
            .map(Self)
            .map_err(err)
    }

    fn points(&self) -> Vec<f64> {
        self.0.points()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn __repr__(&self) -> String {
        format!("Grid({}, {}, {})", self.0.min, self.0.max, self.0.count)
    }
}

#[pyclass(name = "PhaseGrid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPhaseGrid(PhaseGrid);

#[pymethods]
impl PyPhaseGrid {
    #[new]
    fn new(q: &PyGrid, p: &PyGrid) -> Self {
        Self(PhaseGrid::new(q.0, p.0))
    }

    #[staticmethod]
    fn square(half_width: f64, count: usize) -> PyResult<Self> {
        PhaseGrid::square(half_width, count).map(Self).map_err(err)
    }

    #[getter]
    fn q(&self) -> PyGrid {
        PyGrid(self.0.q)
    }

    #[getter]
    fn p(&self) -> PyGrid {
        PyGrid(self.0.p)
    }
}

#[pyclass(name = "Scheme", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScheme(SymmetrizationScheme);

#[pymethods]
impl PyScheme {
    /// `weyl`, `jordan`, `born_jordan` or `point(θ)`
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        SymmetrizationScheme::builtin(name).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (label, atoms, density_nodes = vec![]))]
    fn custom(
        label: &str,
        atoms: Vec<(f64, f64)>,
        density_nodes: Vec<(f64, f64)>,
    ) -> PyResult<Self> {
        SymmetrizationScheme::new(label, atoms, density_nodes)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label.clone()
    }

    fn nodes(&self) -> Vec<(f64, f64)> {
        self.0.nodes()
    }

    fn is_hermitian(&self) -> bool {
        self.0.is_hermitian()
    }

    #[pyo3(signature = (k_max = 8))]
    fn moments(&self, k_max: usize) -> Vec<f64> {
        self.0.moments(k_max).sigma
    }

    fn g(&self, s: f64) -> C64 {
        self.0.characteristic_g(s)
    }

    fn __repr__(&self) -> String {
        format!("Scheme({:?})", self.0.label)
    }
}

#[pyclass(name = "Drive", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDrive(osc::DriveSpec);

#[pymethods]
impl PyDrive {
    #[new]
    #[pyo3(signature = (omega = "1", phi = "0"))]
    fn new(omega: &str, phi: &str) -> PyResult<Self> {
        let d = osc::DriveSpec::parse(omega, phi).map_err(err)?;
        d.check_unit_start().map_err(err)?;
        Ok(Self(d))
    }

    fn omega(&self, t: f64) -> f64 {
        self.0.omega(t)
    }

    fn phi(&self, t: f64) -> f64 {
        self.0.phi(t)
    }

    fn __repr__(&self) -> String {
        format!(
            "Drive(omega={:?}, phi={:?})",
            self.0.omega.to_string(),
            self.0.phi.to_string()
        )
    }
}

#[pyclass(name = "DensityMatrix", frozen)]
struct PyDensity(osc::DensityMatrix);

#[pymethods]
impl PyDensity {
    fn trace(&self) -> C64 {
        self.0.trace()
    }

    fn purity_defect(&self) -> f64 {
        self.0.purity_defect()
    }

    fn entries(&self) -> Vec<Vec<C64>> {
        rows(&self.0.entries)
    }
}

#[pyclass(name = "WignerField", frozen)]
struct PyWigner(ps::WignerField);

#[pymethods]
impl PyWigner {
    #[getter]
    fn tag(&self) -> String {
        tag_str(&self.0.tag)
    }

    #[getter]
    fn grid(&self) -> PyPhaseGrid {
        PyPhaseGrid(self.0.grid)
    }

    /// `values[i][j] = W(q_i, p_j)`
    fn values(&self) -> Vec<Vec<C64>> {
        rows(&self.0.values)
    }

    fn integral(&self) -> C64 {
        self.0.integral()
    }

    fn max_imag(&self) -> f64 {
        self.0.max_imag()
    }

    fn save_qtg(&self, path: &str) -> PyResult<()> {
        self.0.to_qtg().save(path).map_err(err)
    }
}

#[pyclass(name = "FourierImage", frozen)]
struct PyImage(ps::FourierImage);

#[pymethods]
impl PyImage {
    #[getter]
    fn tag(&self) -> String {
        tag_str(&self.0.tag)
    }

    #[getter]
    fn dual(&self) -> PyPhaseGrid {
        PyPhaseGrid(self.0.dual)
    }

    /// `values[a][b] = Λ(k_a, ω_b)`
    fn values(&self) -> Vec<Vec<C64>> {
        rows(&self.0.values)
    }

    fn origin(&self) -> C64 {
        self.0.origin()
    }

    fn max_abs_diff(&self, other: &PyImage) -> PyResult<f64> {
        self.0.max_abs_diff(&other.0).map_err(err)
    }

    fn save_qtg(&self, path: &str) -> PyResult<()> {
        self.0.to_qtg().save(path).map_err(err)
    }
}

#[pyclass(name = "Tomogram", frozen)]
struct PyTomogram(tomo::Tomogram);

#[pymethods]
impl PyTomogram {
    #[getter]
    fn angles(&self) -> Vec<f64> {
        self.0.angles.clone()
    }

    #[getter]
    fn xi(&self) -> PyGrid {
        PyGrid(self.0.xi)
    }

    /// `values[i][j] = f(ξ_j; α_i)`
    fn values(&self) -> Vec<Vec<C64>> {
        rows(&self.0.values)
    }

    fn masses(&self) -> Vec<C64> {
        self.0.masses()
    }

    fn min_real(&self) -> f64 {
        self.0.min_real()
    }
}

/// Exact density matrix of level `n` at time `t` under `drive`.
#[pyfunction]
#[pyo3(signature = (drive, n, t, grid))]
fn density_matrix(drive: &PyDrive, n: usize, t: f64, grid: &PyGrid) -> PyResult<PyDensity> {
    let (times, idx) = if t > 0.0 {
        (vec![0.0, t], 1)
    } else {
        (vec![0.0, 1.0], 0)
    };
    let traj = osc::integrate_trajectory(&drive.0, &times, DEFAULT_TOL).map_err(err)?;
    osc::density_matrix(&traj, n, idx, &grid.0)
        .map(PyDensity)
        .map_err(err)
}

#[pyfunction]
fn partial_wigner(rho: &PyDensity, theta: f64, grid: &PyPhaseGrid) -> PyResult<PyWigner> {
    ps::partial_wigner(&rho.0, theta, &grid.0)
        .map(PyWigner)
        .map_err(err)
}

#[pyfunction]
fn full_wigner(rho: &PyDensity, scheme: &PyScheme, grid: &PyPhaseGrid) -> PyResult<PyWigner> {
    ps::full_wigner(&rho.0, &scheme.0, &grid.0)
        .map(PyWigner)
        .map_err(err)
}

#[pyfunction]
fn fourier_image(w: &PyWigner) -> PyImage {
    PyImage(ps::fourier_image(&w.0))
}

#[pyfunction]
fn inverse_fourier_image(l: &PyImage) -> PyWigner {
    PyWigner(ps::inverse_fourier_image(&l.0))
}

#[pyfunction]
#[pyo3(signature = (w, xi, angles = 128))]
fn radon_tomogram(w: &PyWigner, xi: &PyGrid, angles: usize) -> PyResult<PyTomogram> {
    tomo::radon_tomogram(&w.0, &xi.0, &tomo::uniform_angles(angles))
        .map(PyTomogram)
        .map_err(err)
}

#[pyfunction]
fn inverse_radon(f: &PyTomogram, grid: &PyPhaseGrid) -> PyResult<PyWigner> {
    tomo::inverse_radon(&f.0, &grid.0)
        .map(PyWigner)
        .map_err(err)
}

#[pyfunction]
fn closed_form_lambda(n: usize, theta: f64, k: f64, omega: f64) -> C64 {
    ps::closed_form_lambda_theta(n, theta, k, omega)
}

#[pyfunction]
fn closed_form_wigner_ground(theta: f64, q: f64, p: f64) -> C64 {
    ps::closed_form_wigner_ground(theta, q, p)
}

/// Λ_θ transported to `t_end` along the oscillator characteristics.
#[pyfunction]
#[pyo3(signature = (l0, drive, theta, t_end, dt = 1e-3))]
fn evolve_lambda(
    l0: &PyImage,
    drive: &PyDrive,
    theta: f64,
    t_end: f64,
    dt: f64,
) -> PyResult<PyImage> {
    let cfg = EvolutionConfig::for_theta(drive.0.clone(), theta, dt, t_end).map_err(err)?;
    ev::evolve_lambda_theta(&l0.0, &cfg, theta)
        .map(PyImage)
        .map_err(err)
}

/// Split-step evolution of W_θ under the oscillator Hamiltonian.
#[pyfunction]
#[pyo3(signature = (w0, drive, theta, t_end, dt = 1e-3))]
fn evolve_wigner(
    w0: &PyWigner,
    drive: &PyDrive,
    theta: f64,
    t_end: f64,
    dt: f64,
) -> PyResult<PyWigner> {
    ev::evolve_wigner_separable(&w0.0, theta, &DrivenHarmonic(drive.0.clone()), dt, t_end)
        .map(PyWigner)
        .map_err(err)
}

/// (convention, stationarity error, driven error, passed) for all 16 sign choices.
#[pyfunction]
fn sign_sweep() -> PyResult<Vec<(String, f64, f64, bool)>> {
    let report = ev::sign_sweep(&ev::AnchorSetup::default()).map_err(err)?;
    Ok(report
        .into_iter()
        .map(|e| (e.sign.to_string(), e.stationarity, e.driven, e.passed))
        .collect())
}

/// (axes, shape, flat row-major samples) of a QTG1 file.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn load_qtg(path: &str) -> PyResult<(Vec<(f64, f64)>, Vec<usize>, Vec<C64>)> {
    let a = QtgArray::load(path).map_err(err)?;
    let shape = a.data.shape().to_vec();
    Ok((a.axes, shape, a.data.iter().copied().collect()))
}

#[pymodule]
fn qtomo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QtomoError", m.py().get_type::<QtomoError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyPhaseGrid>()?;
    m.add_class::<PyScheme>()?;
    m.add_class::<PyDrive>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyWigner>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyTomogram>()?;
    m.add_function(wrap_pyfunction!(density_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(partial_wigner, m)?)?;
    m.add_function(wrap_pyfunction!(full_wigner, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_image, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_fourier_image, m)?)?;
    m.add_function(wrap_pyfunction!(radon_tomogram, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_radon, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_wigner_ground, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_wigner, m)?)?;
    m.add_function(wrap_pyfunction!(sign_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(load_qtg, m)?)?;
    Ok(())
}
