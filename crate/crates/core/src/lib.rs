//! Spectral computation of fractional Neumann embedding constants: when the
//! constant function minimizes `I^ε_{s,q}[u] = (⟨(−Δ)^s u,u⟩ + ε^{2s}‖u‖²_{L₂})/‖u‖²_{L_q}`
//! over a bounded domain, and the Gamma-function inequalities that decide
//! the unit-cube case.
//!
//! Functions are represented by coefficients in a truncated Neumann
//! eigenbasis together with a quadrature grid for L_q integrals.

// Range checks are written as `!(x > lo)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod field;
pub mod form;
pub mod functionals;
pub mod inequality;
pub mod minimize;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod spectral;

pub use analysis::{
    bifurcation_scan, bubble_ladder, bubble_quotient, bubble_resolution, cube_constant_value, cube_gap_check,
    epsilon_threshold, estimate_big_e, phase_sweep, sobolev_sharp_constant, staircase_violations, BifurcationPoint,
    BigEEstimate, BigEOptions, BoundKind, BubbleParams, BubblePoint, CubeGap, EpsGrid, PhaseCell,
};
pub use error::{Error, Result};
pub use field::{abs_substitute, analyze, lq_norm, mean_split, recombine, synthesize, CoefficientVector, GridFunction};
pub use form::{hs_norm_sq, quadratic_form, FracOrder};
pub use functionals::{
    auxiliary_functional, phi1_cubed_integral, rayleigh_gradient, rayleigh_quotient, second_variation,
    second_variation_at_one, third_variation_at_one, ProblemParams, QuotientEvaluator,
};
pub use inequality::{verify_chain, ChainConfig, IneqKind, IneqReport};
pub use minimize::{
    brute_force_oracle, local_min_test_at_one, minimize_quotient, LocalTest, LocalVerdict, MinimizeResult, OracleGrid,
    OracleResult, SolverOptions,
};
pub use spectral::{build_box_basis, load_spectral_data, save_spectral_data, DomainKind, DomainSpec, SpectralData};
