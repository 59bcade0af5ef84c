//! Synthetic data generation for the linear regression model
//! y_t = phi_t' theta* + w_t, plus the quantities the diameter bounds need
//! from the regressors: Gram matrices, coherence and the empirical
//! excitation constants (lambda0, kappa).

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpsError};
use crate::matrix_ops::{symmetric_eigen, thin_qr, RANK_TOL};

/// A scalar distribution used for noise or regressor components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Uniform on [a, b].
    Uniform { a: f64, b: f64 },
    /// Zero-mean Gaussian with standard deviation sigma.
    Gaussian { sigma: f64 },
}

impl Distribution {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => {
                if a == b {
                    a
                } else {
                    rng.random_range(a..b)
                }
            }
            Distribution::Gaussian { sigma } => {
                let z: f64 = rand_distr::StandardNormal.sample(rng);
                sigma * z
            }
        }
    }

    /// Subgaussian variance proxy: a/sqrt(3) for Uniform(-a, a), the
    /// standard deviation for a Gaussian.
    pub fn variance_proxy(&self) -> f64 {
        match *self {
            Distribution::Uniform { a: _, b } => b / 3f64.sqrt(),
            Distribution::Gaussian { sigma } => sigma,
        }
    }

    fn is_symmetric_about_zero(&self) -> bool {
        match *self {
            Distribution::Uniform { a, b } => a == -b,
            Distribution::Gaussian { .. } => true,
        }
    }
}

/// Recipe for a synthetic regression dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub n: usize,
    pub d: usize,
    pub theta_star: Vec<f64>,
    /// Noise distribution; must be symmetric about zero.
    pub noise: Distribution,
    /// Componentwise regressor distribution.
    pub regressor: Distribution,
    pub seed: u64,
}

impl GenerationSpec {
    /// The Section-5 style experiment setup: theta* = [5, 5], noise
    /// Unif(-1, 1), regressor components Unif(1, 2).
    pub fn benchmark(n: usize, seed: u64) -> Self {
        GenerationSpec {
            n,
            d: 2,
            theta_star: vec![5.0, 5.0],
            noise: Distribution::Uniform { a: -1.0, b: 1.0 },
            regressor: Distribution::Uniform { a: 1.0, b: 2.0 },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < self.d {
            return Err(SpsError::InvalidInput(format!(
                "need n >= d, got n={}, d={}",
                self.n, self.d
            )));
        }
        if self.theta_star.len() != self.d {
            return Err(SpsError::DimensionMismatch(format!(
                "theta_star has {} entries, d={}",
                self.theta_star.len(),
                self.d
            )));
        }
        if !self.noise.is_symmetric_about_zero() {
            return Err(SpsError::AsymmetricNoise(format!("{:?}", self.noise)));
        }
        Ok(())
    }
}

/// A regression dataset. In synthetic mode the true parameter and the noise
/// realization are retained for the analysis-frame computations.
#[derive(Debug, Clone)]
pub struct RegressionDataset {
    /// n x d regressor matrix, row t = phi_t'.
    pub phi: DMatrix<f64>,
    /// Output vector of length n.
    pub y: DVector<f64>,
    /// True parameter (synthetic mode).
    pub theta_star: Option<DVector<f64>>,
    /// Noise realization (synthetic mode).
    pub w: Option<DVector<f64>>,
}

impl RegressionDataset {
    pub fn new(phi: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if phi.nrows() != y.len() {
            return Err(SpsError::DimensionMismatch(format!(
                "phi has {} rows, y has {} entries",
                phi.nrows(),
                y.len()
            )));
        }
        Ok(RegressionDataset { phi, y, theta_star: None, w: None })
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn d(&self) -> usize {
        self.phi.ncols()
    }

    /// Dataset restricted to the first `t` rows. Synthetic metadata is
    /// carried over (the noise is truncated alongside).
    pub fn prefix(&self, t: usize) -> RegressionDataset {
        RegressionDataset {
            phi: self.phi.rows(0, t).into_owned(),
            y: self.y.rows(0, t).into_owned(),
            theta_star: self.theta_star.clone(),
            w: self.w.as_ref().map(|w| w.rows(0, t).into_owned()),
        }
    }

    /// Write the dataset as CSV with header `phi_1,...,phi_d,y`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let d = self.d();
        let mut header: Vec<String> = (1..=d).map(|j| format!("phi_{j}")).collect();
        header.push("y".to_string());
        wtr.write_record(&header)?;
        for t in 0..self.n() {
            let mut row: Vec<String> = (0..d).map(|j| format!("{}", self.phi[(t, j)])).collect();
            row.push(format!("{}", self.y[t]));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(f)
    }

    /// Read a dataset from CSV with header `phi_1,...,phi_d,y`.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        let cols = header.len();
        if cols < 2 || header.get(cols - 1) != Some("y") {
            return Err(SpsError::InvalidInput(
                "expected CSV header phi_1,...,phi_d,y".to_string(),
            ));
        }
        let d = cols - 1;
        let mut phi_rows: Vec<f64> = Vec::new();
        let mut y: Vec<f64> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            for j in 0..d {
                let v: f64 = record
                    .get(j)
                    .ok_or_else(|| SpsError::InvalidInput("short CSV row".into()))?
                    .trim()
                    .parse()
                    .map_err(|e| SpsError::InvalidInput(format!("bad number: {e}")))?;
                phi_rows.push(v);
            }
            let v: f64 = record
                .get(d)
                .ok_or_else(|| SpsError::InvalidInput("short CSV row".into()))?
                .trim()
                .parse()
                .map_err(|e| SpsError::InvalidInput(format!("bad number: {e}")))?;
            y.push(v);
        }
        let n = y.len();
        RegressionDataset::new(
            DMatrix::from_row_slice(n, d, &phi_rows),
            DVector::from_vec(y),
        )
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Excitation constants estimated from data, feeding the diameter bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AssumptionConstants {
    /// Smallest eigenvalue of the averaged Gram matrix over the scan window.
    pub lambda0: f64,
    /// Coherence growth constant: max of mu(Phi_t) / t^{1-rho}.
    pub kappa: f64,
    pub rho: f64,
    /// Subgaussian variance proxy of the noise.
    pub sigma: f64,
}

/// Generate a synthetic dataset. Deterministic given the seed: the RNG is
/// ChaCha12 seeded with `spec.seed`; regressors are drawn first (row-major),
/// then the noise vector.
pub fn generate_dataset(spec: &GenerationSpec) -> Result<RegressionDataset> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let phi = DMatrix::from_fn(spec.n, spec.d, |_, _| 0.0);
    let mut phi = phi;
    for t in 0..spec.n {
        for j in 0..spec.d {
            phi[(t, j)] = spec.regressor.sample(&mut rng);
        }
    }
    let w = DVector::from_fn(spec.n, |_, _| spec.noise.sample(&mut rng));
    let theta = DVector::from_vec(spec.theta_star.clone());
    let y = &phi * &theta + &w;
    Ok(RegressionDataset {
        phi,
        y,
        theta_star: Some(theta),
        w: Some(w),
    })
}

/// Gram matrix R_n = Phi' Phi and its average Rbar_n = R_n / n.
pub fn gram_matrices(phi: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let r = phi.transpose() * phi;
    let rbar = &r / (phi.nrows() as f64);
    (r, rbar)
}

/// Coherence mu(Phi) = (n/d) * max_i ||Phi_Q' e_i||^2, where Phi_Q is the
/// thin-QR orthonormal factor. Always in [1, n/d] for full-rank Phi.
pub fn coherence(phi: &DMatrix<f64>) -> Result<f64> {
    let (q, _) = thin_qr(phi)?;
    let (n, d) = phi.shape();
    let max_row = (0..n)
        .map(|i| q.row(i).norm_squared())
        .fold(0.0f64, f64::max);
    Ok((n as f64 / d as f64) * max_row)
}

/// Leverage scores of the prefix via the Gram inverse: the squared row norms
/// of the orthonormal factor equal phi_i' R^{-1} phi_i. Used by the prefix
/// scan to avoid a full QR per t.
fn max_leverage(phi: &DMatrix<f64>, gram_inv: &DMatrix<f64>) -> f64 {
    let mut max = 0.0f64;
    for i in 0..phi.nrows() {
        let row = phi.row(i).transpose();
        let h = (row.transpose() * gram_inv * &row)[(0, 0)];
        max = max.max(h);
    }
    max
}

/// Scan trajectory prefixes t in [t0, n] for the smallest averaged-Gram
/// eigenvalue (lambda0) and the largest coherence ratio mu(Phi_t)/t^{1-rho}
/// (kappa). sigma and rho are echoed into the result.
pub fn estimate_constants(
    trajectories: &[RegressionDataset],
    t0: usize,
    rho: f64,
    sigma: f64,
) -> Result<AssumptionConstants> {
    if trajectories.is_empty() {
        return Err(SpsError::InvalidInput("no trajectories".into()));
    }
    let d = trajectories[0].d();
    if t0 < d {
        return Err(SpsError::InvalidInput(format!("t0={t0} < d={d}")));
    }
    let mut lambda0 = f64::INFINITY;
    let mut kappa = 0.0f64;
    for (traj_idx, traj) in trajectories.iter().enumerate() {
        let n = traj.n();
        if n < t0 {
            return Err(SpsError::InvalidInput(format!(
                "trajectory {traj_idx} has n={n} < t0={t0}"
            )));
        }
        // Incremental Gram over prefixes; eigen and inverse are d x d.
        let mut gram = traj.phi.rows(0, t0 - 1).transpose() * traj.phi.rows(0, t0 - 1);
        for t in t0..=n {
            let row = traj.phi.row(t - 1).transpose();
            gram += &row * row.transpose();
            let eig = symmetric_eigen(&gram);
            let lmax = eig.values.last().copied().unwrap_or(0.0);
            if eig.values[0] <= RANK_TOL * lmax.max(f64::MIN_POSITIVE) {
                return Err(SpsError::SingularPrefixGram { trajectory: traj_idx, t });
            }
            lambda0 = lambda0.min(eig.values[0] / t as f64);
            let gram_inv = gram
                .clone()
                .try_inverse()
                .ok_or(SpsError::SingularPrefixGram { trajectory: traj_idx, t })?;
            let prefix = traj.phi.rows(0, t).into_owned();
            let mu = (t as f64 / d as f64) * max_leverage(&prefix, &gram_inv);
            kappa = kappa.max(mu / (t as f64).powf(1.0 - rho));
        }
    }
    Ok(AssumptionConstants { lambda0, kappa, rho, sigma })
}

/// Mode for the "completely exciting" check: test every d-subset of rows, or
/// k uniformly drawn subsets.
#[derive(Debug, Clone, Copy)]
pub enum ExcitationMode {
    Exhaustive,
    Randomized { subsets: usize, seed: u64 },
}

fn binomial(n: usize, d: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..d {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

fn subset_singular(phi: &DMatrix<f64>, idx: &[usize]) -> bool {
    let d = phi.ncols();
    let sub = DMatrix::from_fn(d, d, |i, j| phi[(idx[i], j)]);
    let scale: f64 = idx
        .iter()
        .map(|&i| phi.row(i).norm())
        .product::<f64>()
        .max(f64::MIN_POSITIVE);
    sub.determinant().abs() <= RANK_TOL * scale
}

/// Check whether any d regressor rows span R^d (every d-subset nonsingular).
/// Returns false on the first singular subset found.
pub fn check_completely_exciting(phi: &DMatrix<f64>, mode: ExcitationMode) -> Result<bool> {
    let (n, d) = phi.shape();
    if n < d {
        return Err(SpsError::DimensionMismatch(format!(
            "need n >= d, got {n} x {d}"
        )));
    }
    match mode {
        ExcitationMode::Exhaustive => {
            let total = binomial(n, d);
            if total > 1_000_000 {
                return Err(SpsError::ExhaustiveInfeasible { n, d, subsets: total });
            }
            // Lexicographic enumeration of d-subsets of {0, .., n-1}.
            let mut idx: Vec<usize> = (0..d).collect();
            loop {
                if subset_singular(phi, &idx) {
                    return Ok(false);
                }
                let mut i = d;
                loop {
                    if i == 0 {
                        return Ok(true);
                    }
                    i -= 1;
                    if idx[i] != i + n - d {
                        break;
                    }
                }
                idx[i] += 1;
                for j in i + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
        ExcitationMode::Randomized { subsets, seed } => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut pool: Vec<usize> = (0..n).collect();
            for _ in 0..subsets {
                // partial Fisher-Yates: first d entries are a uniform subset
                for i in 0..d {
                    let j = rng.random_range(i..n);
                    pool.swap(i, j);
                }
                if subset_singular(phi, &pool[..d]) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}
