//! Closed-form diameter bounds: the f and g constants, the validity
//! threshold on n, the general (m, q) bound and its m = 2 special case,
//! and the log-log shrinkage-rate fit.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpsError};

/// All scalar inputs of the diameter bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Subgaussian variance proxy of the noise.
    pub sigma: f64,
    /// Lower bound on the smallest averaged-Gram eigenvalue.
    pub lambda0: f64,
    /// Coherence growth constant.
    pub kappa: f64,
    /// Coherence growth exponent, in (0, 1].
    pub rho: f64,
    /// Failure probability of the bound.
    pub delta: f64,
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub q: usize,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.lambda0 > 0.0 && self.kappa > 0.0) {
            return Err(SpsError::InvalidInput(
                "sigma, lambda0, kappa must be positive".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(SpsError::InvalidInput(format!("rho={} not in (0,1]", self.rho)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SpsError::DeltaOutOfRange(format!("delta={}", self.delta)));
        }
        if self.q == 0 || self.q >= self.m {
            return Err(SpsError::InvalidMq { m: self.m, q: self.q });
        }
        Ok(())
    }

    fn delta_prime(&self) -> f64 {
        self.delta / (self.m - self.q) as f64
    }
}

/// The noise-term constant f(delta). The branch switches at
/// delta = 4 exp(-(n d lambda0)^2), closed on the left: at and above the
/// threshold the sqrt-log branch applies.
pub fn f_delta(delta: f64, sigma: f64, d: usize, n: usize, lambda0: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(SpsError::DeltaOutOfRange(format!(
            "f requires 0 < delta <= 2, got {delta}"
        )));
    }
    let df = d as f64;
    let threshold = 4.0 * (-(n as f64 * df * lambda0).powi(2)).exp();
    let value = if delta >= threshold {
        sigma * (8.0 * df * (4.0 / delta).ln().sqrt() + df).sqrt()
    } else {
        sigma * (8.0 * (4.0 / delta).ln() + df).sqrt()
    };
    Ok(value)
}

/// The excitation-term constant g(delta) = ln(4d/delta) * 2 kappa d^2.
pub fn g_delta(delta: f64, kappa: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    if !(delta > 0.0 && delta <= 4.0 * df) {
        return Err(SpsError::DeltaOutOfRange(format!(
            "g requires 0 < delta <= 4d, got {delta}"
        )));
    }
    Ok((4.0 * df / delta).ln() * 2.0 * kappa * df * df)
}

/// Smallest sample size at which the bound is valid:
/// ceil(g(delta/(m-q))^{1/rho}).
pub fn min_valid_n(inputs: &BoundInputs) -> Result<usize> {
    inputs.validate()?;
    let g = g_delta(inputs.delta_prime(), inputs.kappa, inputs.d)?;
    Ok(g.powf(1.0 / inputs.rho).ceil().max(1.0) as usize)
}

/// High-probability diameter bound for the (m, q) SPS region:
/// 4 f(delta') / (n^{1-rho} lambda0 (n^rho - g(delta')))^{1/2} with
/// delta' = delta/(m-q). Valid only above `min_valid_n` with
/// n^rho > g(delta') strictly.
pub fn theorem2_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let min_n = min_valid_n(inputs)?;
    let dp = inputs.delta_prime();
    let g = g_delta(dp, inputs.kappa, inputs.d)?;
    let nf = inputs.n as f64;
    let n_rho = nf.powf(inputs.rho);
    if inputs.n < inputs.d || inputs.n < min_n || n_rho <= g {
        return Err(SpsError::BoundNotValid { n: inputs.n, min_n });
    }
    let f = f_delta(dp, inputs.sigma, inputs.d, inputs.n, inputs.lambda0)?;
    Ok(4.0 * f / (nf.powf(1.0 - inputs.rho) * inputs.lambda0 * (n_rho - g)).sqrt())
}

/// The m = 2, q = 1 special case: 2 f(delta) / (n^{1-rho} lambda0
/// (n^rho - g(delta)))^{1/2}. Exactly half of `theorem2_bound` at the same
/// inputs.
pub fn lemma8_bound(inputs: &BoundInputs) -> Result<f64> {
    if inputs.m != 2 || inputs.q != 1 {
        return Err(SpsError::InvalidMq { m: inputs.m, q: inputs.q });
    }
    Ok(theorem2_bound(inputs)? / 2.0)
}

/// Ordinary least squares fit of log(diameter) against log(n); returns
/// (slope, intercept). A 1/sqrt(n) law gives slope -0.5.
pub fn shrinkage_fit(ns: &[usize], diameters: &[f64]) -> Result<(f64, f64)> {
    if ns.len() != diameters.len() {
        return Err(SpsError::DimensionMismatch(format!(
            "{} sample sizes vs {} diameters",
            ns.len(),
            diameters.len()
        )));
    }
    if ns.len() < 3 {
        return Err(SpsError::InvalidInput("need at least 3 pairs".into()));
    }
    if ns.iter().any(|&n| n == 0) || diameters.iter().any(|&v| !(v > 0.0)) {
        return Err(SpsError::InvalidInput(
            "sample sizes and diameters must be strictly positive".into(),
        ));
    }
    let k = ns.len() as f64;
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = diameters.iter().map(|&v| v.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    Ok((slope, ybar - slope * xbar))
}
