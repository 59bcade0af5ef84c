//! Python bindings: synthetic datasets, confidence regions with exact
//! membership tests, the ellipsoidal diameter, and the finite-sample
//! diameter bounds.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sps_core::bounds::BoundInputs;
use sps_core::data_model::{generate_dataset, Distribution, GenerationSpec, RegressionDataset};
use sps_core::experiments::{run_coverage, ExperimentConfig};
use sps_core::region::{exact_diameter_m2, pairwise_region, sample_region_points};
use sps_core::sps::{
    coverage_probability, least_squares_estimate, sps_indicator, sps_initialize, SpsConfig,
};

fn err(e: sps_core::SpsError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A regression dataset: an n-by-d regressor matrix and n responses.
#[pyclass(name = "Dataset")]
struct PyDataset {
    inner: RegressionDataset,
}

#[pymethods]
impl PyDataset {
    /// Build from explicit rows: phi is a list of d-element rows, y the
    /// responses.
    #[new]
    fn new(phi: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Self> {
        if phi.is_empty() || phi.len() != y.len() {
            return Err(PyValueError::new_err("phi and y must be nonempty and equal length"));
        }
        let d = phi[0].len();
        if d == 0 || phi.iter().any(|r| r.len() != d) {
            return Err(PyValueError::new_err("phi rows must share a positive length"));
        }
        let n = phi.len();
        let phi = DMatrix::from_fn(n, d, |i, j| phi[i][j]);
        let y = DVector::from_vec(y);
        RegressionDataset::new(phi, y).map(|inner| PyDataset { inner }).map_err(err)
    }

    /// Synthetic data: theta* = [5, 5], uniform(-1, 1) noise, uniform(1, 2)
    /// regressors.
    #[staticmethod]
    fn synthetic(n: usize, seed: u64) -> PyResult<Self> {
        let spec = GenerationSpec::benchmark(n, seed);
        generate_dataset(&spec).map(|inner| PyDataset { inner }).map_err(err)
    }

    /// Synthetic data with explicit theta* and Gaussian noise/regressors.
    #[staticmethod]
    fn synthetic_gaussian(theta_star: Vec<f64>, n: usize, sigma: f64, seed: u64) -> PyResult<Self> {
        let spec = GenerationSpec {
            n,
            d: theta_star.len(),
            theta_star,
            noise: Distribution::Gaussian { sigma },
            regressor: Distribution::Gaussian { sigma: 1.0 },
            seed,
        };
        spec.validate().map_err(err)?;
        generate_dataset(&spec).map(|inner| PyDataset { inner }).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn phi(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n())
            .map(|i| self.inner.phi.row(i).iter().copied().collect())
            .collect()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y.iter().copied().collect()
    }

    #[getter]
    fn theta_star(&self) -> Option<Vec<f64>> {
        self.inner.theta_star.as_ref().map(|t| t.iter().copied().collect())
    }

    fn least_squares(&self) -> PyResult<Vec<f64>> {
        least_squares_estimate(&self.inner)
            .map(|t| t.iter().copied().collect())
            .map_err(err)
    }
}

/// A confidence region for the regression parameter at level 1 - q/m,
/// carrying its random signs and permutation.
#[pyclass(name = "ConfidenceRegion")]
struct PyRegion {
    dataset: RegressionDataset,
    config: SpsConfig,
}

#[pymethods]
impl PyRegion {
    #[new]
    fn new(dataset: &PyDataset, m: usize, q: usize, seed: u64) -> PyResult<Self> {
        let config = sps_initialize(m, q, &dataset.inner.phi, seed).map_err(err)?;
        Ok(PyRegion { dataset: dataset.inner.clone(), config })
    }

    /// Exact coverage probability 1 - q/m.
    #[getter]
    fn confidence_level(&self) -> f64 {
        coverage_probability(self.config.m, self.config.q).expect("validated at construction")
    }

    /// Exact membership test for a candidate parameter.
    fn contains(&self, theta: Vec<f64>) -> PyResult<bool> {
        if theta.len() != self.dataset.d() {
            return Err(PyValueError::new_err("theta has the wrong dimension"));
        }
        sps_indicator(&self.dataset, &self.config, &DVector::from_vec(theta)).map_err(err)
    }

    /// Exact diameter for m = 2 as (diameter, bounded); diameter is +inf
    /// when the region is unbounded.
    fn diameter(&self) -> PyResult<(f64, bool)> {
        if self.config.m != 2 {
            return Err(PyValueError::new_err("exact diameter requires m = 2"));
        }
        let region = pairwise_region(&self.dataset, &self.config, 1).map_err(err)?;
        let report = exact_diameter_m2(&region).map_err(err)?;
        Ok((report.diameter, report.bounded))
    }

    /// Uniform rejection sample of points inside the region.
    fn sample(&self, count: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let points =
            sample_region_points(&self.dataset, &self.config, count, seed).map_err(err)?;
        Ok(points.iter().map(|p| p.iter().copied().collect()).collect())
    }
}

/// High-probability diameter bound; valid from `min_valid_n` upward.
#[pyfunction]
#[pyo3(signature = (sigma, lambda0, kappa, rho, delta, d, n, m=2, q=1))]
#[allow(clippy::too_many_arguments)]
fn diameter_bound(
    sigma: f64,
    lambda0: f64,
    kappa: f64,
    rho: f64,
    delta: f64,
    d: usize,
    n: usize,
    m: usize,
    q: usize,
) -> PyResult<f64> {
    let inputs = BoundInputs { sigma, lambda0, kappa, rho, delta, d, n, m, q };
    sps_core::bounds::theorem2_bound(&inputs).map_err(err)
}

/// Smallest n at which `diameter_bound` is valid.
#[pyfunction]
#[pyo3(signature = (kappa, rho, delta, d, m=2, q=1))]
fn min_valid_n(kappa: f64, rho: f64, delta: f64, d: usize, m: usize, q: usize) -> PyResult<usize> {
    let inputs = BoundInputs { sigma: 1.0, lambda0: 1.0, kappa, rho, delta, d, n: d, m, q };
    sps_core::bounds::min_valid_n(&inputs).map_err(err)
}

/// Monte Carlo coverage of the true parameter with the built-in synthetic
/// model; returns (trials, hits, coverage).
#[pyfunction]
fn coverage_experiment(
    n: usize,
    m: usize,
    q: usize,
    trials: usize,
    seed: u64,
) -> PyResult<(usize, usize, f64)> {
    let mut cfg = ExperimentConfig::benchmark(seed);
    cfg.generation.n = n;
    cfg.t0 = cfg.t0.min(n);
    cfg.grid = vec![n];
    cfg.m = m;
    cfg.q = q;
    cfg.trajectories = trials;
    let result = run_coverage(&cfg).map_err(err)?;
    Ok((result.trials, result.hits, result.coverage))
}

#[pymodule]
fn sps_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyRegion>()?;
    m.add_function(wrap_pyfunction!(diameter_bound, m)?)?;
    m.add_function(wrap_pyfunction!(min_valid_n, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_experiment, m)?)?;
    Ok(())
}
