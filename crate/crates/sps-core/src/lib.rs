//! Exact, distribution-free confidence regions for linear regression built
//! from sign-perturbed residual sums, together with the region geometry
//! (ellipsoidal outer form, boundedness certificate, diameters), finite
//! sample diameter bounds, and a Monte Carlo experiment harness.

pub mod bounds;
pub mod data_model;
pub mod error;
pub mod experiments;
pub mod matrix_ops;
pub mod region;
pub mod sps;

pub use bounds::{
    f_delta, g_delta, lemma8_bound, min_valid_n, shrinkage_fit, theorem2_bound, BoundInputs,
};
pub use data_model::{
    check_completely_exciting, coherence, estimate_constants, generate_dataset, gram_matrices,
    AssumptionConstants, Distribution, ExcitationMode, GenerationSpec, RegressionDataset,
};
pub use error::{Result, SpsError};
pub use experiments::{
    derive_seed, lower_quantile, run_concentration_check, run_coverage, run_figure1,
    run_property_suite, CheckRow, CoverageResult, ExperimentConfig, Figure1Result, Figure1Row,
};
pub use matrix_ops::{principal_sqrt_inverse, pseudoinverse, symmetric_eigen, thin_qr};
pub use region::{
    build_certificate, empirical_diameter, exact_diameter_m2, is_bounded, pairwise_region,
    sample_region_points, theta_tilde_region, DiameterReport, Frame, ProjectionCertificate,
    QuadraticRegion,
};
pub use sps::{
    compute_sums, coverage_probability, least_squares_estimate, rank_with_tiebreak,
    sps_indicator, sps_initialize, RankResult, SpsConfig,
};
