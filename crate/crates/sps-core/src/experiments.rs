//! Monte Carlo experiment harness: exact-coverage measurement, the
//! empirical-vs-theoretical diameter comparison, the randomized property
//! suite over the certificate identities, and the concentration tail checks.
//!
//! Determinism contract: per-trajectory seeds are a pure function of the
//! master seed, a stream tag and the trajectory index; reductions are
//! order-fixed, so results are byte-identical at any parallelism degree.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{lemma8_bound, shrinkage_fit, theorem2_bound, BoundInputs};
use crate::data_model::{
    coherence, generate_dataset, gram_matrices, AssumptionConstants, Distribution,
    GenerationSpec, RegressionDataset,
};
use crate::error::{Result, SpsError};
use crate::matrix_ops::{pseudoinverse, symmetric_eigen};
use crate::region::{
    build_certificate, empirical_diameter, exact_diameter_m2, is_bounded, pairwise_region,
    sample_region_points, theta_tilde_region,
};
use crate::sps::{sps_indicator, sps_initialize};

/// Full experiment configuration; mirrors the TOML config file schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generation: GenerationSpec,
    pub m: usize,
    pub q: usize,
    pub delta: f64,
    /// First prefix length included in constant estimation and the grid.
    pub t0: usize,
    /// Sample sizes at which diameters are measured (ascending).
    pub grid: Vec<usize>,
    /// Number of independently simulated trajectories (s).
    pub trajectories: usize,
    /// Points sampled per region when m > 2.
    pub points_per_region: usize,
    pub master_seed: u64,
    /// Coherence exponent used by the bound.
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Externally supplied lambda0; estimated from the trajectories if absent.
    #[serde(default)]
    pub lambda0: Option<f64>,
    /// Externally supplied kappa; estimated from the trajectories if absent.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn default_rho() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// The experiment setup of the simulation study: n = 2000, s = 100,
    /// t0 = 250, delta = 0.1, m = 2, q = 1, 0.5-level regions.
    pub fn benchmark(master_seed: u64) -> Self {
        ExperimentConfig {
            generation: GenerationSpec::benchmark(2000, 0),
            m: 2,
            q: 1,
            delta: 0.1,
            t0: 250,
            grid: (250..=2000).step_by(125).collect(),
            trajectories: 100,
            points_per_region: 100,
            master_seed,
            rho: 1.0,
            lambda0: None,
            kappa: None,
            output_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generation.validate()?;
        if self.q == 0 || self.q >= self.m {
            return Err(SpsError::InvalidMq { m: self.m, q: self.q });
        }
        if self.t0 < self.generation.d {
            return Err(SpsError::Config(format!(
                "t0={} must be >= d={}",
                self.t0, self.generation.d
            )));
        }
        if self.trajectories == 0 {
            return Err(SpsError::Config("trajectories must be >= 1".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpsError::Config("grid must be strictly ascending".into()));
        }
        if let (Some(&lo), Some(&hi)) = (self.grid.first(), self.grid.last()) {
            if lo < self.t0 || hi > self.generation.n {
                return Err(SpsError::Config(format!(
                    "grid must lie in [t0={}, n={}]",
                    self.t0, self.generation.n
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| SpsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn sigma(&self) -> f64 {
        self.generation.noise.variance_proxy()
    }
}

/// SplitMix64 step; used to derive independent per-task seeds from the
/// master seed.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for (master, stream, index); pure and collision-resistant enough
/// for decorrelated Monte Carlo streams.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ stream.wrapping_mul(0xa076_1d64_78bd_642f)) ^ index)
}

/// Run `f` under a thread pool capped by the SPS_THREADS env var (absent
/// means the rayon default).
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("SPS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(k) if k > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

/// Outcome of a coverage experiment.
#[derive(Debug, Clone, Copy)]
pub struct CoverageResult {
    pub trials: usize,
    pub hits: usize,
    pub coverage: f64,
}

/// Fraction of fresh (dataset, SPS randomization) pairs whose region
/// contains the true parameter; exactly 1 - q/m in
/// expectation.
pub fn run_coverage(config: &ExperimentConfig) -> Result<CoverageResult> {
    config.validate()?;
    let trials = config.trajectories;
    let outcomes: Vec<Result<bool>> = with_thread_pool(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut spec = config.generation.clone();
                spec.seed = derive_seed(config.master_seed, 0, i as u64);
                let ds = generate_dataset(&spec)?;
                let cfg = sps_initialize(
                    config.m,
                    config.q,
                    &ds.phi,
                    derive_seed(config.master_seed, 1, i as u64),
                )?;
                let theta_star = ds.theta_star.clone().expect("synthetic");
                sps_indicator(&ds, &cfg, &theta_star)
            })
            .collect()
    });
    let mut hits = 0usize;
    for o in outcomes {
        if o? {
            hits += 1;
        }
    }
    Ok(CoverageResult {
        trials,
        hits,
        coverage: hits as f64 / trials as f64,
    })
}

/// The smallest value x in `values` with #{v <= x} >= level * len
/// (the quantile definition used for the empirical curves).
pub fn lower_quantile(values: &[f64], level: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let threshold = level * sorted.len() as f64;
    let mut count_le = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] <= x {
            j += 1;
        }
        count_le = j;
        if count_le as f64 >= threshold {
            return x;
        }
        i = j;
    }
    let _ = count_le;
    *sorted.last().unwrap()
}

/// One output row of the diameter comparison.
#[derive(Debug, Clone, Copy)]
pub struct Figure1Row {
    pub t: usize,
    pub empirical_quantile_diameter: f64,
    pub median_diameter: f64,
    /// None when t is below the bound's validity threshold.
    pub theoretical_bound: Option<f64>,
}

/// Full result of the diameter experiment.
#[derive(Debug, Clone)]
pub struct Figure1Result {
    pub rows: Vec<Figure1Row>,
    pub constants: AssumptionConstants,
}

/// Per trajectory, grow one dataset and measure the region diameter on each
/// grid prefix (exact ellipsoid diameter for m = 2, sampled otherwise); the
/// SPS randomization is redrawn per t. Emits the (1-delta) lower quantile,
/// the median, and the theoretical bound per t.
pub fn run_figure1(config: &ExperimentConfig) -> Result<Figure1Result> {
    config.validate()?;
    if config.grid.is_empty() {
        return Err(SpsError::Config("figure1 requires a nonempty grid".into()));
    }
    let s = config.trajectories;
    let trajectories: Vec<RegressionDataset> = (0..s)
        .map(|i| {
            let mut spec = config.generation.clone();
            spec.seed = derive_seed(config.master_seed, 0, i as u64);
            generate_dataset(&spec)
        })
        .collect::<Result<_>>()?;

    let constants = estimate_or_override(config, &trajectories)?;

    // diameters[gi][j] = diameter of trajectory j's region on prefix grid[gi]
    let per_traj: Vec<Result<Vec<f64>>> = with_thread_pool(|| {
        trajectories
            .par_iter()
            .enumerate()
            .map(|(j, traj)| {
                config
                    .grid
                    .iter()
                    .enumerate()
                    .map(|(gi, &t)| {
                        let prefix = traj.prefix(t);
                        let seed = derive_seed(
                            config.master_seed,
                            2,
                            (j * config.grid.len() + gi) as u64,
                        );
                        let cfg = sps_initialize(config.m, config.q, &prefix.phi, seed)?;
                        if config.m == 2 {
                            let region = pairwise_region(&prefix, &cfg, 1)?;
                            Ok(exact_diameter_m2(&region)?.diameter)
                        } else {
                            let points = sample_region_points(
                                &prefix,
                                &cfg,
                                config.points_per_region,
                                derive_seed(config.master_seed, 3, (j * config.grid.len() + gi) as u64),
                            )?;
                            empirical_diameter(&points)
                        }
                    })
                    .collect()
            })
            .collect()
    });
    let per_traj: Vec<Vec<f64>> = per_traj.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(config.grid.len());
    for (gi, &t) in config.grid.iter().enumerate() {
        let diams: Vec<f64> = per_traj.iter().map(|v| v[gi]).collect();
        let quantile = lower_quantile(&diams, 1.0 - config.delta);
        let median = lower_quantile(&diams, 0.5);
        let inputs = BoundInputs {
            sigma: config.sigma(),
            lambda0: constants.lambda0,
            kappa: constants.kappa,
            rho: config.rho,
            delta: config.delta,
            d: config.generation.d,
            n: t,
            m: config.m,
            q: config.q,
        };
        let bound = theorem2_bound(&inputs).ok();
        rows.push(Figure1Row {
            t,
            empirical_quantile_diameter: quantile,
            median_diameter: median,
            theoretical_bound: bound,
        });
    }
    Ok(Figure1Result { rows, constants })
}

fn estimate_or_override(
    config: &ExperimentConfig,
    trajectories: &[RegressionDataset],
) -> Result<AssumptionConstants> {
    let sigma = config.sigma();
    if let (Some(lambda0), Some(kappa)) = (config.lambda0, config.kappa) {
        return Ok(AssumptionConstants { lambda0, kappa, rho: config.rho, sigma });
    }
    let estimated =
        crate::data_model::estimate_constants(trajectories, config.t0, config.rho, sigma)?;
    Ok(AssumptionConstants {
        lambda0: config.lambda0.unwrap_or(estimated.lambda0),
        kappa: config.kappa.unwrap_or(estimated.kappa),
        rho: config.rho,
        sigma,
    })
}

/// Slope of log median diameter against log t over the grid.
pub fn figure1_shrinkage_slope(result: &Figure1Result) -> Result<(f64, f64)> {
    let ns: Vec<usize> = result.rows.iter().map(|r| r.t).collect();
    let medians: Vec<f64> = result.rows.iter().map(|r| r.median_diameter).collect();
    shrinkage_fit(&ns, &medians)
}

/// One pass/fail line of the property or concentration report.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub check: String,
    /// Max observed residual (properties) or empirical tail (concentration).
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn rademacher_row(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Randomized verification of the certificate identities and the geometry
/// invariants on `instance_count` instances with n in [4, 50], d in [1, 4].
pub fn run_property_suite(seed: u64, instance_count: usize) -> Result<Vec<CheckRow>> {
    if instance_count == 0 {
        return Err(SpsError::InvalidInput("instance_count must be >= 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let mut sym_max = 0.0f64;
    let mut idem_max = 0.0f64;
    let mut rank_excess = 0usize;
    let mut m0tm0_max = 0.0f64;
    let mut a_identity_max = 0.0f64;
    let mut frame_max = 0.0f64;
    let mut bounded_mismatch = 0usize;
    let mut chain_radius_max = 0.0f64;
    let mut chain_diam_max = 0.0f64;

    let mut produced = 0usize;
    while produced < instance_count {
        let d = rng.random_range(1..=4usize);
        let n = rng.random_range(4.max(d)..=50usize);
        let spec = GenerationSpec {
            n,
            d,
            theta_star: (0..d).map(|_| rng.random_range(-5.0..5.0)).collect(),
            noise: Distribution::Gaussian { sigma: 1.0 },
            regressor: Distribution::Gaussian { sigma: 1.0 },
            seed: rng.random(),
        };
        let ds = generate_dataset(&spec)?;
        let signs = rademacher_row(&mut rng, n);
        let cert = match build_certificate(&ds.phi, &signs) {
            Ok(c) => c,
            Err(SpsError::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        };
        produced += 1;

        let m = cert.m.as_ref().expect("n <= 2000");
        sym_max = sym_max.max((m - m.transpose()).norm());
        idem_max = idem_max.max((m * m - m).norm() / (1.0 + m.norm()));
        let eig_m = symmetric_eigen(m);
        let rank = eig_m.values.iter().filter(|&&l| l > 0.5).count();
        rank_excess = rank_excess.max(rank.saturating_sub(d));

        let k2 = &cert.k * &cert.k;
        let i_minus_k2 = DMatrix::identity(d, d) - &k2;
        let lhs = cert.m0.transpose() * &cert.m0;
        m0tm0_max =
            m0tm0_max.max((lhs - &i_minus_k2).norm() / (1.0 + i_minus_k2.norm()));

        // analysis-frame A = R - Q R^{-1} Q vs Phi_R' (I - K^2) Phi_R
        let tilde = theta_tilde_region(&ds, &signs)?;
        let (_, r_factor) = crate::matrix_ops::thin_qr(&ds.phi)?;
        let a_qr = r_factor.transpose() * &i_minus_k2 * &r_factor;
        a_identity_max =
            a_identity_max.max((&tilde.a - &a_qr).norm() / (1.0 + a_qr.norm()));

        // frame consistency against the theta-space pairwise quadratic
        let cfg = {
            let mut c = sps_initialize(2, 1, &ds.phi, rng.random())?;
            for t in 0..n {
                c.signs[(0, t)] = signs[t];
            }
            c
        };
        let pairwise = pairwise_region(&ds, &cfg, 1)?;
        let theta_star = ds.theta_star.clone().unwrap();
        for _ in 0..5 {
            let theta =
                DVector::from_fn(d, |_, _| rng.random_range(-10.0..10.0));
            let tilde_value = tilde.evaluate(&(&theta_star - &theta));
            let pair_value = n as f64 * pairwise.evaluate(&theta);
            frame_max = frame_max
                .max((tilde_value - pair_value).abs() / (1.0 + pair_value.abs()));
        }

        // boundedness criterion vs finite diameter, plus the bound chain
        let report = exact_diameter_m2(&tilde)?;
        if is_bounded(&cert) != report.bounded {
            bounded_mismatch += 1;
        }
        if report.bounded {
            let w = ds.w.as_ref().unwrap();
            let wmw = cert.quad_form(w);
            let a_pinv = pseudoinverse(&tilde.a, 1e-12)?;
            let radius_sq = tilde.b.dot(&(&a_pinv * &tilde.b)) - tilde.c;
            chain_radius_max = chain_radius_max.max(radius_sq - wmw);
            let chain_diam = 2.0 * (wmw.max(0.0) / report.lambda_min_a).sqrt();
            chain_diam_max = chain_diam_max.max(report.diameter - chain_diam);
        }
    }

    Ok(vec![
        CheckRow {
            check: "lemma5_symmetry".into(),
            value: sym_max,
            threshold: 1e-8,
            pass: sym_max <= 1e-8,
        },
        CheckRow {
            check: "lemma5_idempotency".into(),
            value: idem_max,
            threshold: 1e-8,
            pass: idem_max <= 1e-8,
        },
        CheckRow {
            check: "lemma5_rank_at_most_d".into(),
            value: rank_excess as f64,
            threshold: 0.0,
            pass: rank_excess == 0,
        },
        CheckRow {
            check: "identity_m0tm0_eq_i_minus_k2".into(),
            value: m0tm0_max,
            threshold: 1e-8,
            pass: m0tm0_max <= 1e-8,
        },
        CheckRow {
            check: "identity_a_eq_phir_i_minus_k2_phir".into(),
            value: a_identity_max,
            threshold: 1e-8,
            pass: a_identity_max <= 1e-8,
        },
        CheckRow {
            check: "frame_consistency".into(),
            value: frame_max,
            threshold: 1e-8,
            pass: frame_max <= 1e-8,
        },
        CheckRow {
            check: "boundedness_matches_diameter".into(),
            value: bounded_mismatch as f64,
            threshold: 0.0,
            pass: bounded_mismatch == 0,
        },
        CheckRow {
            check: "bound_chain_radius_le_wmw".into(),
            value: chain_radius_max,
            threshold: 1e-6,
            pass: chain_radius_max <= 1e-6,
        },
        CheckRow {
            check: "bound_chain_diameter".into(),
            value: chain_diam_max,
            threshold: 1e-6,
            pass: chain_diam_max <= 1e-6,
        },
    ])
}

/// Estimate the tail probabilities of Lemmas 6 and 7 by Monte Carlo and
/// compare each against its theoretical bound plus 3-sigma sampling slack.
pub fn run_concentration_check(
    config: &ExperimentConfig,
    epsilon_grid: &[f64],
) -> Result<Vec<CheckRow>> {
    config.validate()?;
    let n = config.generation.n;
    let d = config.generation.d;
    let sigma = config.sigma();
    let noise_variance = match config.generation.noise {
        Distribution::Uniform { a, b } => (b - a).powi(2) / 12.0,
        Distribution::Gaussian { sigma } => sigma * sigma,
    };
    let trials = config.trajectories;

    // per trajectory: normalized |X - EX| and max |lambda(K)|
    let stats: Vec<Result<(f64, f64, f64, f64)>> = with_thread_pool(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut spec = config.generation.clone();
                spec.seed = derive_seed(config.master_seed, 0, i as u64);
                let ds = generate_dataset(&spec)?;
                let mut rng =
                    ChaCha12Rng::seed_from_u64(derive_seed(config.master_seed, 1, i as u64));
                let signs = rademacher_row(&mut rng, n);
                let cert = build_certificate(&ds.phi, &signs)?;
                let w = ds.w.as_ref().expect("synthetic");
                let x = cert.quad_form(w);
                // EX = Var(W) * trace(M); trace(M) = rank(I - K^2)
                let k2 = &cert.k * &cert.k;
                let i_minus_k2 = DMatrix::identity(d, d) - k2;
                let eig = symmetric_eigen(&i_minus_k2);
                let lmax = eig.values.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
                let rank = eig
                    .values
                    .iter()
                    .filter(|&&l| l.abs() > 1e-10 * lmax.max(f64::MIN_POSITIVE))
                    .count();
                let ex = noise_variance * rank as f64;
                // per-trajectory constants for the lemma normalization
                let (_, rbar) = gram_matrices(&ds.phi);
                let lambda_n = symmetric_eigen(&rbar).values[0];
                let mu = coherence(&ds.phi)?;
                Ok((
                    (x - ex).abs(),
                    cert.max_abs_eigenvalue_k(),
                    lambda_n,
                    mu,
                ))
            })
            .collect()
    });
    let stats: Vec<(f64, f64, f64, f64)> = stats.into_iter().collect::<Result<_>>()?;

    // lambda0 / kappa at this fixed n: overrides, else the empirical
    // extremes over the simulated trajectories
    let lambda0 = config.lambda0.unwrap_or_else(|| {
        stats.iter().map(|s| s.2).fold(f64::INFINITY, f64::min)
    });
    let kappa = config.kappa.unwrap_or_else(|| {
        stats
            .iter()
            .map(|s| s.3 / (n as f64).powf(1.0 - config.rho))
            .fold(0.0f64, f64::max)
    });

    let slack = |bound: f64| {
        let p = bound.clamp(0.0, 1.0);
        3.0 * (p * (1.0 - p) / trials as f64).sqrt()
    };

    let mut rows = Vec::new();
    for &eps in epsilon_grid {
        if eps < 0.0 {
            return Err(SpsError::InvalidInput(format!("epsilon {eps} < 0")));
        }
        let tail = stats
            .iter()
            .filter(|s| s.0 / (n as f64 * lambda0) >= eps)
            .count() as f64
            / trials as f64;
        let bound = if eps <= 8.0 * sigma * sigma * (d * d) as f64 {
            2.0 * (-(eps * eps * (n as f64).powi(2) * lambda0 * lambda0)
                / (64.0 * (d * d) as f64 * sigma.powi(4)))
            .exp()
        } else {
            2.0 * (-(eps * n as f64 * lambda0) / (8.0 * sigma * sigma)).exp()
        };
        let threshold = bound + slack(bound);
        rows.push(CheckRow {
            check: format!("lemma6_eps={eps}"),
            value: tail,
            threshold,
            pass: tail <= threshold,
        });
    }
    for &eps0 in epsilon_grid.iter().filter(|&&e| e > 0.0 && e <= 1.0) {
        let tail = stats.iter().filter(|s| s.1 >= eps0).count() as f64 / trials as f64;
        let bound = 2.0
            * d as f64
            * (-((n as f64).powf(config.rho) * eps0 * eps0) / (2.0 * kappa * (d * d) as f64))
                .exp();
        let threshold = bound + slack(bound);
        rows.push(CheckRow {
            check: format!("lemma7_eps0={eps0}"),
            value: tail,
            threshold,
            pass: tail <= threshold,
        });
    }
    Ok(rows)
}

/// Rows of a pure bound-curve sweep: (n, Some(bound)) or (n, None) when the
/// bound is not valid at that n.
pub fn bound_curve(
    base: &BoundInputs,
    ns: impl IntoIterator<Item = usize>,
) -> Vec<(usize, Option<f64>)> {
    ns.into_iter()
        .map(|n| {
            let mut inputs = *base;
            inputs.n = n;
            (n, theorem2_bound(&inputs).ok())
        })
        .collect()
}

// ---- CSV rendering -------------------------------------------------------

pub fn coverage_csv(result: &CoverageResult) -> String {
    format!(
        "trials,hits,coverage\n{},{},{}\n",
        result.trials, result.hits, result.coverage
    )
}

pub fn figure1_csv(result: &Figure1Result) -> String {
    let mut out = String::from("t,empirical_quantile_diameter,median_diameter,theoretical_bound\n");
    for row in &result.rows {
        let bound = row
            .theoretical_bound
            .map_or_else(|| "NA".to_string(), |b| b.to_string());
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.t, row.empirical_quantile_diameter, row.median_diameter, bound
        ));
    }
    out
}

pub fn checks_csv(rows: &[CheckRow]) -> String {
    let mut out = String::from("check,max_residual_or_tail,threshold,pass\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.check, row.value, row.threshold, row.pass
        ));
    }
    out
}

pub fn bound_csv(rows: &[(usize, Option<f64>)]) -> String {
    let mut out = String::from("n,bound\n");
    for (n, bound) in rows {
        out.push_str(&format!(
            "{},{}\n",
            n,
            bound.map_or_else(|| "NA".to_string(), |b| b.to_string())
        ));
    }
    out
}

/// Points-as-CSV with the diameter report in `# key=value` header comments.
pub fn points_csv(points: &[DVector<f64>], report: Option<&crate::region::DiameterReport>) -> String {
    let mut out = String::new();
    if let Some(r) = report {
        out.push_str(&format!("# diameter={}\n# bounded={}\n", r.diameter, r.bounded));
        let center: Vec<String> = r.center.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("# center={}\n", center.join(";")));
        out.push_str(&format!("# lambda_min_A={}\n", r.lambda_min_a));
    }
    if let Some(p) = points.first() {
        let header: Vec<String> = (1..=p.len()).map(|j| format!("x_{j}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for p in points {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

/// The m = 2, q = 1 special case of the bound, exposed for sweeps.
pub fn lemma8_curve(base: &BoundInputs, ns: impl IntoIterator<Item = usize>) -> Vec<(usize, Option<f64>)> {
    ns.into_iter()
        .map(|n| {
            let mut inputs = *base;
            inputs.n = n;
            (n, lemma8_bound(&inputs).ok())
        })
        .collect()
}
