//! Quadratic representation of pairwise (m = 2 style) SPS regions, the
//! projection-certificate matrices K, M0, M, boundedness, exact diameters
//! and region sampling.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::data_model::{gram_matrices, RegressionDataset};
use crate::error::{Result, SpsError};
use crate::matrix_ops::{pseudoinverse, symmetric_eigen, thin_qr};
use crate::sps::{least_squares_estimate, sps_indicator, SpsConfig};

/// Which parameterization a quadratic region lives in: the raw parameter
/// theta, or the analysis variable theta_tilde = theta* - theta.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    ThetaSpace,
    ThetaTildeSpace,
}

/// Membership set { x : x'Ax + 2x'b + c <= 0 } with A symmetric PSD.
#[derive(Debug, Clone)]
pub struct QuadraticRegion {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
    pub frame: Frame,
}

impl QuadraticRegion {
    /// Value of the quadratic form at x; membership iff <= 0.
    pub fn evaluate(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.a * x)[(0, 0)] + 2.0 * x.dot(&self.b) + self.c
    }
}

/// The matrices of the projection certificate: K = Phi_Q' D_alpha Phi_Q,
/// M0 = Phi_Q K - D_alpha Phi_Q and the orthogonal projection
/// M = M0 (M0'M0)^dagger M0'. M is materialized only for n <= 2000; all
/// certificate checks are expressible through M0 and K.
#[derive(Debug, Clone)]
pub struct ProjectionCertificate {
    pub k: DMatrix<f64>,
    pub m0: DMatrix<f64>,
    pub m: Option<DMatrix<f64>>,
}

/// Pseudoinverse of a PSD matrix whose spectrum lives in [0, O(1)], with an
/// absolute eigenvalue cutoff. M0'M0 = I - K^2 has eigenvalues in [0, 1], so
/// a relative cutoff would invert pure round-off when the matrix is ~0
/// (e.g. the all-plus sign row).
fn pinv_unit_psd(s: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let eig = symmetric_eigen(s);
    let d = s.nrows();
    let mut out = DMatrix::zeros(d, d);
    for (j, &l) in eig.values.iter().enumerate() {
        if l > abs_tol {
            let v = eig.vectors.column(j);
            out += v * v.transpose() / l;
        }
    }
    out
}

/// Absolute eigenvalue cutoff for the certificate pseudoinverses.
const CERT_EIG_TOL: f64 = 1e-10;

impl ProjectionCertificate {
    /// Quadratic form w' M w, computed through M0 when M is not materialized.
    pub fn quad_form(&self, w: &DVector<f64>) -> f64 {
        match &self.m {
            Some(m) => (w.transpose() * m * w)[(0, 0)],
            None => {
                let k2 = &self.k * &self.k;
                let inner = DMatrix::identity(k2.nrows(), k2.ncols()) - k2;
                let pinv = pinv_unit_psd(&inner, CERT_EIG_TOL);
                let v = self.m0.transpose() * w;
                (v.transpose() * pinv * v)[(0, 0)]
            }
        }
    }

    pub fn max_abs_eigenvalue_k(&self) -> f64 {
        symmetric_eigen(&self.k)
            .values
            .iter()
            .fold(0.0f64, |m, &l| m.max(l.abs()))
    }
}

/// Diameter and boundedness summary of a quadratic region.
#[derive(Debug, Clone)]
pub struct DiameterReport {
    /// Diameter of the region, or +infinity when unbounded.
    pub diameter: f64,
    pub bounded: bool,
    /// Region center -A^dagger b (in the region's frame).
    pub center: DVector<f64>,
    pub lambda_min_a: f64,
}

/// Affine map of the i-th sum: S_i(theta) = c_i - F_i theta. Index 0 is the
/// unperturbed sum.
pub fn affine_sum_maps(
    dataset: &RegressionDataset,
    config: &SpsConfig,
    i: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = dataset.n();
    if i >= config.m {
        return Err(SpsError::InvalidInput(format!(
            "sum index {i} out of range for m={}",
            config.m
        )));
    }
    if config.n() != n {
        return Err(SpsError::DimensionMismatch(format!(
            "config built for n={}, dataset has n={n}",
            config.n()
        )));
    }
    let w = &config.sqrt_inv_gram;
    let (phi_alpha, y_alpha) = if i == 0 {
        (dataset.phi.clone(), dataset.y.clone())
    } else {
        let mut phi_alpha = dataset.phi.clone();
        let mut y_alpha = dataset.y.clone();
        for t in 0..n {
            let s = config.signs[(i - 1, t)];
            y_alpha[t] *= s;
            for j in 0..dataset.d() {
                phi_alpha[(t, j)] *= s;
            }
        }
        (phi_alpha, y_alpha)
    };
    let f = w * (dataset.phi.transpose() * &phi_alpha) / n as f64;
    let c = w * (dataset.phi.transpose() * &y_alpha) / n as f64;
    Ok((f, c))
}

/// Pairwise region { theta : ||S_0(theta)||^2 - ||S_i(theta)||^2 <= 0 } as a
/// quadratic in theta space.
pub fn pairwise_region(
    dataset: &RegressionDataset,
    config: &SpsConfig,
    i: usize,
) -> Result<QuadraticRegion> {
    if i == 0 {
        return Err(SpsError::InvalidInput("pairwise index must be >= 1".into()));
    }
    let (f0, c0) = affine_sum_maps(dataset, config, 0)?;
    let (fi, ci) = affine_sum_maps(dataset, config, i)?;
    let a = f0.transpose() * &f0 - fi.transpose() * &fi;
    let b = -(f0.transpose() * &c0 - fi.transpose() * &ci);
    let c = c0.norm_squared() - ci.norm_squared();
    Ok(QuadraticRegion {
        a: (&a + a.transpose()) * 0.5,
        b,
        c,
        frame: Frame::ThetaSpace,
    })
}

/// Analysis-frame region in theta_tilde = theta* - theta, built from the
/// closed forms A = R - Q R^{-1} Q, b = B w, c = w' C w. Requires synthetic
/// mode (the noise realization enters b and c).
pub fn theta_tilde_region(
    dataset: &RegressionDataset,
    signs_row: &[f64],
) -> Result<QuadraticRegion> {
    let w = dataset
        .w
        .as_ref()
        .ok_or(SpsError::NotSynthetic("noise realization"))?;
    dataset
        .theta_star
        .as_ref()
        .ok_or(SpsError::NotSynthetic("true parameter"))?;
    let n = dataset.n();
    if signs_row.len() != n {
        return Err(SpsError::DimensionMismatch(format!(
            "signs row has {} entries, n={n}",
            signs_row.len()
        )));
    }
    let phi = &dataset.phi;
    let (r, _) = gram_matrices(phi);
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or(SpsError::NotPositiveDefinite { eigenvalue: 0.0 })?;
    // D_alpha-scaled copies of Phi
    let mut phi_alpha = phi.clone();
    let mut w_alpha = w.clone();
    for t in 0..n {
        w_alpha[t] *= signs_row[t];
        for j in 0..dataset.d() {
            phi_alpha[(t, j)] *= signs_row[t];
        }
    }
    let q_n = phi.transpose() * &phi_alpha;
    let a = &r - &q_n * &r_inv * q_n.transpose();
    // b = (Phi' - Q R^{-1} Phi' D_alpha) w = Phi'w - Q R^{-1} Phi' (D_alpha w)
    let b = phi.transpose() * w - &q_n * &r_inv * (phi.transpose() * &w_alpha);
    // c = w'(Phi R^{-1} Phi')w - (D_alpha w)'(Phi R^{-1} Phi')(D_alpha w)
    let pw = r_inv.clone() * (phi.transpose() * w);
    let pwa = r_inv * (phi.transpose() * &w_alpha);
    let c = (phi.transpose() * w).dot(&pw) - (phi.transpose() * &w_alpha).dot(&pwa);
    Ok(QuadraticRegion {
        a: (&a + a.transpose()) * 0.5,
        b,
        c,
        frame: Frame::ThetaTildeSpace,
    })
}

/// Certificate matrices for a single sign row.
pub fn build_certificate(phi: &DMatrix<f64>, signs_row: &[f64]) -> Result<ProjectionCertificate> {
    let (q, _) = thin_qr(phi)?;
    let n = phi.nrows();
    if signs_row.len() != n {
        return Err(SpsError::DimensionMismatch(format!(
            "signs row has {} entries, n={n}",
            signs_row.len()
        )));
    }
    let mut q_alpha = q.clone();
    for t in 0..n {
        for j in 0..q.ncols() {
            q_alpha[(t, j)] *= signs_row[t];
        }
    }
    let k = q.transpose() * &q_alpha;
    let k = (&k + k.transpose()) * 0.5;
    let m0 = &q * &k - &q_alpha;
    let m = if n <= 2000 {
        let m0tm0 = m0.transpose() * &m0;
        let pinv = pinv_unit_psd(&m0tm0, CERT_EIG_TOL);
        let m = &m0 * pinv * m0.transpose();
        Some((&m + m.transpose()) * 0.5)
    } else {
        None
    };
    Ok(ProjectionCertificate { k, m0, m })
}

/// Boundedness of the pairwise region: bounded iff max |lambda(K)| stays
/// strictly below 1 (threshold 1 - 1e-10 against round-off).
pub fn is_bounded(certificate: &ProjectionCertificate) -> bool {
    certificate.max_abs_eigenvalue_k() < 1.0 - 1e-10
}

/// Exact diameter of an m = 2 quadratic region via its ellipsoid form
/// ||A^{1/2}(x + A^dagger b)||^2 <= b'A^dagger b - c.
pub fn exact_diameter_m2(region: &QuadraticRegion) -> Result<DiameterReport> {
    let eig = symmetric_eigen(&region.a);
    let d = region.a.nrows();
    let lambda_max = eig.values.last().copied().unwrap_or(0.0);
    let lambda_min = eig.values[0];
    if lambda_min < -1e-9 * lambda_max.abs().max(f64::MIN_POSITIVE) {
        return Err(SpsError::NotPositiveDefinite { eigenvalue: lambda_min });
    }
    let a_pinv = pseudoinverse(&region.a, 1e-12)?;
    let center = -(&a_pinv * &region.b);
    if lambda_min <= 1e-10 * lambda_max.max(f64::MIN_POSITIVE) {
        return Ok(DiameterReport {
            diameter: f64::INFINITY,
            bounded: false,
            center,
            lambda_min_a: lambda_min,
        });
    }
    // radius quantity; negative values signal pure round-off on a
    // degenerate region, so clamp at zero
    let radius_sq = (region.b.dot(&(&a_pinv * &region.b)) - region.c).max(0.0);
    let diameter = 2.0 * (radius_sq / lambda_min).sqrt();
    let _ = d;
    Ok(DiameterReport {
        diameter,
        bounded: true,
        center,
        lambda_min_a: lambda_min,
    })
}

/// Greatest pairwise Euclidean distance among the points (exact O(k^2) scan).
pub fn empirical_diameter(points: &[DVector<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(SpsError::InvalidInput(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let mut max = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            max = max.max((&points[i] - &points[j]).norm());
        }
    }
    Ok(max)
}

/// Sample points from the SPS region by uniform rejection from a ball that
/// encloses it. The ball is centered at the least squares estimate with
/// radius the (m-q)-th smallest of (pairwise semi-diameter_i + distance of
/// pairwise center_i to the estimate): any member of the region lies in at
/// least q pairwise regions, so it is inside that many of the balls.
pub fn sample_region_points(
    dataset: &RegressionDataset,
    config: &SpsConfig,
    n_points: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let d = dataset.d();
    let theta_hat = least_squares_estimate(dataset)?;
    let mut radii = Vec::with_capacity(config.m - 1);
    for i in 1..config.m {
        let region = pairwise_region(dataset, config, i)?;
        let report = exact_diameter_m2(&region)?;
        if !report.bounded {
            return Err(SpsError::UnboundedRegion);
        }
        radii.push(report.diameter / 2.0 + (&report.center - &theta_hat).norm());
    }
    radii.sort_by(f64::total_cmp);
    let radius = radii[config.m - config.q - 1];

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    if radius == 0.0 {
        // collapsed region: the estimate itself is the only candidate
        debug_assert!(sps_indicator(dataset, config, &theta_hat)?);
        points.resize(n_points, theta_hat);
        return Ok(points);
    }
    let mut drawn = 0usize;
    while points.len() < n_points {
        // uniform draw in the d-ball: gaussian direction, radius ~ U^(1/d)
        let dir = DVector::from_fn(d, |_, _| {
            let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
            z
        });
        let norm = dir.norm();
        drawn += 1;
        if norm == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let candidate = &theta_hat + dir * (radius * u.powf(1.0 / d as f64) / norm);
        if sps_indicator(dataset, config, &candidate)? {
            points.push(candidate);
        }
        if drawn >= 1_000_000 && (points.len() as f64) < 1e-6 * drawn as f64 {
            return Err(SpsError::RejectionTooSlow {
                accepted: points.len(),
                drawn,
            });
        }
    }
    Ok(points)
}
