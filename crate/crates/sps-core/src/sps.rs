//! The sign-perturbed sums construction: initialization, the membership
//! indicator and the least squares estimate.
//!
//! RNG contract: all randomization is drawn from ChaCha12 seeded with the
//! 64-bit seed, in this fixed order: the (m-1) x n sign array row-major
//! (i outer, t inner), then the permutation by Fisher-Yates (for j from m-1
//! down to 1, swap j with a uniform index in 0..=j). Storing only the seed
//! therefore suffices to replay a configuration.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data_model::{gram_matrices, RegressionDataset};
use crate::error::{Result, SpsError};
use crate::matrix_ops::principal_sqrt_inverse;

/// Immutable SPS randomization plus precomputed normalization matrix.
#[derive(Debug, Clone)]
pub struct SpsConfig {
    pub m: usize,
    pub q: usize,
    /// Confidence level p = 1 - q/m.
    pub p: f64,
    /// (m-1) x n array of +-1 perturbation signs; row i-1 belongs to S_i.
    pub signs: DMatrix<f64>,
    /// Random permutation of {0, .., m-1} used for tie-breaking.
    pub perm: Vec<usize>,
    /// Inverse principal square root of the averaged Gram matrix.
    pub sqrt_inv_gram: DMatrix<f64>,
    pub seed: u64,
}

/// Serializable form of a config. The sign array is optional: the seed alone
/// reproduces it under the RNG contract above.
#[derive(Debug, Serialize, Deserialize)]
pub struct SpsConfigRecord {
    pub m: usize,
    pub q: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signs: Option<Vec<Vec<i8>>>,
}

impl SpsConfig {
    pub fn n(&self) -> usize {
        self.signs.ncols()
    }

    pub fn record(&self, include_signs: bool) -> SpsConfigRecord {
        SpsConfigRecord {
            m: self.m,
            q: self.q,
            seed: self.seed,
            signs: include_signs.then(|| {
                (0..self.signs.nrows())
                    .map(|i| (0..self.signs.ncols()).map(|t| self.signs[(i, t)] as i8).collect())
                    .collect()
            }),
        }
    }

    pub fn to_json(&self, include_signs: bool) -> String {
        serde_json::to_string_pretty(&self.record(include_signs)).expect("serializable")
    }
}

/// Exact coverage probability p = 1 - q/m of the SPS region.
pub fn coverage_probability(m: usize, q: usize) -> Result<f64> {
    if q == 0 || q >= m {
        return Err(SpsError::InvalidMq { m, q });
    }
    Ok(1.0 - q as f64 / m as f64)
}

/// SPS initialization: draw the Rademacher sign array and the tie-breaking
/// permutation, and precompute the inverse principal square root of Rbar_n.
pub fn sps_initialize(m: usize, q: usize, phi: &DMatrix<f64>, seed: u64) -> Result<SpsConfig> {
    let p = coverage_probability(m, q)?;
    let n = phi.nrows();
    let (_, rbar) = gram_matrices(phi);
    let sqrt_inv_gram = principal_sqrt_inverse(&rbar)?;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut signs = DMatrix::zeros(m - 1, n);
    for i in 0..m - 1 {
        for t in 0..n {
            signs[(i, t)] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
    }
    let mut perm: Vec<usize> = (0..m).collect();
    for j in (1..m).rev() {
        let k = rng.random_range(0..=j);
        perm.swap(j, k);
    }
    Ok(SpsConfig { m, q, p, signs, perm, sqrt_inv_gram, seed })
}

/// Least squares estimate theta_hat = R_n^{-1} Phi' y.
pub fn least_squares_estimate(dataset: &RegressionDataset) -> Result<DVector<f64>> {
    let (r, _) = gram_matrices(&dataset.phi);
    let rhs = dataset.phi.transpose() * &dataset.y;
    let chol = nalgebra::linalg::Cholesky::new(r)
        .ok_or(SpsError::NotPositiveDefinite { eigenvalue: 0.0 })?;
    Ok(chol.solve(&rhs))
}

/// Evaluate the reference sum S_0 and the perturbed sums S_1..S_{m-1} at
/// theta: S_i = Rbar^{-1/2} (1/n) sum_t alpha_{i,t} phi_t eps_t(theta).
pub fn compute_sums(
    dataset: &RegressionDataset,
    config: &SpsConfig,
    theta: &DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    let n = dataset.n();
    let d = dataset.d();
    if config.n() != n {
        return Err(SpsError::DimensionMismatch(format!(
            "config built for n={}, dataset has n={n}",
            config.n()
        )));
    }
    if theta.len() != d {
        return Err(SpsError::DimensionMismatch(format!(
            "theta has {} entries, d={d}",
            theta.len()
        )));
    }
    let eps = &dataset.y - &dataset.phi * theta;
    let mut sums = Vec::with_capacity(config.m);
    // S_0: unperturbed
    let s0 = &config.sqrt_inv_gram * (dataset.phi.transpose() * &eps) / n as f64;
    sums.push(s0);
    for i in 0..config.m - 1 {
        let mut acc = DVector::zeros(d);
        for t in 0..n {
            let a = config.signs[(i, t)] * eps[t];
            for j in 0..d {
                acc[j] += a * dataset.phi[(t, j)];
            }
        }
        sums.push(&config.sqrt_inv_gram * acc / n as f64);
    }
    Ok(sums)
}

/// Result of the rank step of the indicator.
#[derive(Debug, Clone)]
pub struct RankResult {
    /// Rank of ||S_0||^2 in the tie-broken order, in [1, m].
    pub rank: usize,
    pub norms_sq: Vec<f64>,
    /// Whether any exact floating-point tie was encountered.
    pub tie_broken: bool,
}

/// Rank of the first norm-square among all m of them, under the ordering
/// x_k > x_j, with exact ties resolved by perm(k) > perm(j).
pub fn rank_with_tiebreak(norms_sq: &[f64], perm: &[usize]) -> RankResult {
    debug_assert!(norms_sq.len() >= 2 && perm.len() == norms_sq.len());
    let mut rank = 1usize;
    let mut tie_broken = false;
    for i in 1..norms_sq.len() {
        if norms_sq[0] > norms_sq[i] {
            rank += 1;
        } else if norms_sq[0] == norms_sq[i] {
            tie_broken = true;
            if perm[0] > perm[i] {
                rank += 1;
            }
        }
    }
    RankResult { rank, norms_sq: norms_sq.to_vec(), tie_broken }
}

/// SPS-Indicator: theta is in the p-level region iff the rank of ||S_0||^2
/// is at most m - q.
pub fn sps_indicator(
    dataset: &RegressionDataset,
    config: &SpsConfig,
    theta: &DVector<f64>,
) -> Result<bool> {
    let sums = compute_sums(dataset, config, theta)?;
    let norms_sq: Vec<f64> = sums.iter().map(|s| s.norm_squared()).collect();
    let r = rank_with_tiebreak(&norms_sq, &config.perm);
    Ok(r.rank <= config.m - config.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::{generate_dataset, Distribution, GenerationSpec};
    use approx::assert_relative_eq;

    fn bench_dataset(n: usize, seed: u64) -> RegressionDataset {
        generate_dataset(&GenerationSpec::benchmark(n, seed)).unwrap()
    }

    #[test]
    fn coverage_probability_values() {
        assert_eq!(coverage_probability(2, 1).unwrap(), 0.5);
        assert_eq!(coverage_probability(20, 1).unwrap(), 0.95);
        assert_relative_eq!(coverage_probability(5, 4).unwrap(), 0.2, epsilon = 1e-15);
        assert!(coverage_probability(2, 2).is_err());
        assert!(coverage_probability(2, 0).is_err());
    }

    #[test]
    fn initialize_is_deterministic() {
        let ds = bench_dataset(50, 1);
        let a = sps_initialize(5, 2, &ds.phi, 99).unwrap();
        let b = sps_initialize(5, 2, &ds.phi, 99).unwrap();
        assert_eq!(a.signs, b.signs);
        assert_eq!(a.perm, b.perm);
        assert_relative_eq!(a.p, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn initialize_invariants() {
        let ds = bench_dataset(80, 2);
        let c = sps_initialize(100, 5, &ds.phi, 7).unwrap();
        assert_relative_eq!(c.p, 0.95, epsilon = 1e-15);
        for i in 0..c.signs.nrows() {
            for t in 0..c.signs.ncols() {
                assert!(c.signs[(i, t)] == 1.0 || c.signs[(i, t)] == -1.0);
            }
        }
        let mut seen = vec![false; 100];
        for &p in &c.perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
        // sqrt_inv_gram^2 = Rbar^{-1}
        let (_, rbar) = gram_matrices(&ds.phi);
        let prod = &c.sqrt_inv_gram * &c.sqrt_inv_gram * &rbar;
        assert!((prod - DMatrix::<f64>::identity(2, 2)).amax() < 1e-9);
    }

    #[test]
    fn initialize_rejects_singular_gram() {
        let phi = DMatrix::from_fn(10, 2, |_, _| 1.0);
        assert!(sps_initialize(2, 1, &phi, 0).is_err());
    }

    #[test]
    fn lse_identity_design() {
        let phi = DMatrix::<f64>::identity(2, 2);
        let y = DVector::from_vec(vec![3.0, 7.0]);
        let ds = RegressionDataset::new(phi, y).unwrap();
        let theta = least_squares_estimate(&ds).unwrap();
        assert_relative_eq!(theta[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(theta[1], 7.0, epsilon = 1e-12);
    }

    #[test]
    fn lse_recovers_noiseless_parameter() {
        let mut spec = GenerationSpec::benchmark(40, 4);
        spec.noise = Distribution::Uniform { a: 0.0, b: 0.0 };
        let ds = generate_dataset(&spec).unwrap();
        let theta = least_squares_estimate(&ds).unwrap();
        assert!((theta - ds.theta_star.as_ref().unwrap()).amax() < 1e-10);
    }

    #[test]
    fn lse_normal_equations_residual() {
        let ds = bench_dataset(300, 8);
        let theta = least_squares_estimate(&ds).unwrap();
        let resid = ds.phi.transpose() * (&ds.y - &ds.phi * &theta);
        let scale = (ds.phi.transpose() * &ds.y).norm();
        assert!(resid.norm() < 1e-8 * scale);
    }

    #[test]
    fn lse_near_truth_on_benchmark_data() {
        let mut ok = 0;
        for seed in 0..100u64 {
            let ds = bench_dataset(2000, seed);
            let theta = least_squares_estimate(&ds).unwrap();
            let err = (theta - ds.theta_star.as_ref().unwrap()).norm();
            if err < 0.2 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "only {ok}/100 seeds within 0.2 of [5,5]");
    }

    #[test]
    fn s0_vanishes_at_lse() {
        let ds = bench_dataset(100, 3);
        let cfg = sps_initialize(4, 1, &ds.phi, 12).unwrap();
        let theta = least_squares_estimate(&ds).unwrap();
        let sums = compute_sums(&ds, &cfg, &theta).unwrap();
        assert!(sums[0].norm() < 1e-9);
    }

    #[test]
    fn all_plus_signs_collapse_to_s0() {
        let ds = bench_dataset(60, 5);
        let mut cfg = sps_initialize(3, 1, &ds.phi, 2).unwrap();
        cfg.signs.row_mut(0).fill(1.0);
        let theta = DVector::from_vec(vec![4.0, 6.0]);
        let sums = compute_sums(&ds, &cfg, &theta).unwrap();
        assert!((&sums[1] - &sums[0]).amax() < 1e-12);
    }

    #[test]
    fn sums_match_naive_loop_oracle() {
        let ds = bench_dataset(5, 6);
        let cfg = sps_initialize(3, 1, &ds.phi, 77).unwrap();
        let theta = DVector::from_vec(vec![1.5, -0.5]);
        let sums = compute_sums(&ds, &cfg, &theta).unwrap();
        // naive oracle, scalar loops only
        for i in 0..3 {
            let mut acc = vec![0.0f64; 2];
            for t in 0..5 {
                let eps = ds.y[t] - ds.phi[(t, 0)] * theta[0] - ds.phi[(t, 1)] * theta[1];
                let a = if i == 0 { 1.0 } else { cfg.signs[(i - 1, t)] };
                acc[0] += a * ds.phi[(t, 0)] * eps;
                acc[1] += a * ds.phi[(t, 1)] * eps;
            }
            let mut expect = vec![0.0f64; 2];
            for r in 0..2 {
                for c in 0..2 {
                    expect[r] += cfg.sqrt_inv_gram[(r, c)] * acc[c] / 5.0;
                }
            }
            assert!((sums[i][0] - expect[0]).abs() < 1e-12);
            assert!((sums[i][1] - expect[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_flip_leaves_norm_unchanged() {
        let ds = bench_dataset(40, 9);
        let cfg = sps_initialize(4, 1, &ds.phi, 5).unwrap();
        let mut flipped = cfg.clone();
        for t in 0..flipped.signs.ncols() {
            flipped.signs[(1, t)] = -flipped.signs[(1, t)];
        }
        let theta = DVector::from_vec(vec![5.3, 4.7]);
        let a = compute_sums(&ds, &cfg, &theta).unwrap();
        let b = compute_sums(&ds, &flipped, &theta).unwrap();
        assert!((a[2].norm_squared() - b[2].norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn sums_are_affine_in_theta() {
        let ds = bench_dataset(30, 10);
        let cfg = sps_initialize(3, 1, &ds.phi, 3).unwrap();
        let ta = DVector::from_vec(vec![1.0, 2.0]);
        let tb = DVector::from_vec(vec![-3.0, 0.5]);
        let lam = 0.3;
        let tmix = &ta * lam + &tb * (1.0 - lam);
        let sa = compute_sums(&ds, &cfg, &ta).unwrap();
        let sb = compute_sums(&ds, &cfg, &tb).unwrap();
        let sm = compute_sums(&ds, &cfg, &tmix).unwrap();
        for i in 0..3 {
            let mix = &sa[i] * lam + &sb[i] * (1.0 - lam);
            assert!((&sm[i] - mix).amax() < 1e-10);
        }
    }

    #[test]
    fn rank_without_ties() {
        let r = rank_with_tiebreak(&[5.0, 3.0, 7.0], &[0, 1, 2]);
        assert_eq!(r.rank, 2);
        assert!(!r.tie_broken);
    }

    #[test]
    fn rank_tie_breaking() {
        let r = rank_with_tiebreak(&[5.0, 5.0], &[1, 0]);
        assert_eq!(r.rank, 2);
        assert!(r.tie_broken);
        let r = rank_with_tiebreak(&[5.0, 5.0], &[0, 1]);
        assert_eq!(r.rank, 1);
        assert!(r.tie_broken);
    }

    #[test]
    fn lse_always_inside_region() {
        for seed in 0..20u64 {
            let ds = bench_dataset(100, seed);
            let cfg = sps_initialize(5, 2, &ds.phi, seed + 1000).unwrap();
            let theta = least_squares_estimate(&ds).unwrap();
            assert!(sps_indicator(&ds, &cfg, &theta).unwrap());
        }
    }

    #[test]
    fn far_point_rejected() {
        let mut rejected = 0;
        for seed in 0..100u64 {
            let ds = bench_dataset(500, seed);
            let cfg = sps_initialize(2, 1, &ds.phi, seed + 5000).unwrap();
            let theta = least_squares_estimate(&ds).unwrap()
                + DVector::from_vec(vec![1e6, 1e6]);
            if !sps_indicator(&ds, &cfg, &theta).unwrap() {
                rejected += 1;
            }
        }
        assert!(rejected >= 99, "far point accepted too often: {rejected}/100 rejected");
    }

    #[test]
    fn region_monotone_in_q() {
        // fixed randomization: if the rank passes the stricter threshold
        // m - q' (q' >= q), it passes the looser one m - q
        let ds = bench_dataset(50, 14);
        let cfg = sps_initialize(6, 1, &ds.phi, 8).unwrap();
        for gird in 0..30 {
            let theta = DVector::from_vec(vec![
                4.0 + 0.1 * gird as f64,
                6.0 - 0.1 * gird as f64,
            ]);
            let sums = compute_sums(&ds, &cfg, &theta).unwrap();
            let norms: Vec<f64> = sums.iter().map(|s| s.norm_squared()).collect();
            let rank = rank_with_tiebreak(&norms, &cfg.perm).rank;
            for q_strict in 1..6 {
                for q_loose in 1..=q_strict {
                    if rank <= 6 - q_strict {
                        assert!(rank <= 6 - q_loose);
                    }
                }
            }
        }
    }

    #[test]
    fn config_json_round_trip() {
        let ds = bench_dataset(10, 15);
        let cfg = sps_initialize(3, 1, &ds.phi, 555).unwrap();
        let json = cfg.to_json(true);
        let rec: SpsConfigRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(rec.m, 3);
        assert_eq!(rec.q, 1);
        assert_eq!(rec.seed, 555);
        let signs = rec.signs.unwrap();
        assert_eq!(signs.len(), 2);
        assert_eq!(signs[0].len(), 10);
        // seed-only record suffices to rebuild the same config
        let rebuilt = sps_initialize(rec.m, rec.q, &ds.phi, rec.seed).unwrap();
        assert_eq!(rebuilt.signs, cfg.signs);
        assert_eq!(rebuilt.perm, cfg.perm);
    }
}
