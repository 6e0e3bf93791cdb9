//! Time-constrained scaling-law toolkit.
//!
//! Given a grid of training runs — model size × wall-clock budget → loss
//! (bits per byte) — this crate fits the three power laws that govern
//! fixed-hardware training (optimal size, best loss, and optimal depth
//! versus budget), classifies each budget's regime from the shape of its
//! loss row, detects overfitting as non-monotone loss over time, plans
//! model sizes for new budgets on a profiled GPU, and mechanistically
//! simulates the dual U-shape that produces all of the above.
//!
//! A reference dataset (the embedded run grid, model config table,
//! multi-seed cells, and the constants reports are compared against) ships
//! with the crate; every analysis also runs on user-supplied CSV/JSON
//! grids with the same schema.

// `!(x > 0.0)` is used deliberately in validation code: unlike the
// suggested `x <= 0.0`, it also rejects NaN, which is the semantics
// every one of those checks needs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod dataset;
pub mod domain;
pub mod hardware;
pub mod ingest;
pub mod planner;
pub mod powerlaw;
pub mod sim;

pub use budget::{
    budget_reports, classify_regime, marginal_returns, multiseed_stats, optimum_at_budget,
    overfit_flags, BudgetError, BudgetOptimum, BudgetReport, DominancePair, MarginalStep,
    MultiseedReport, OverfitFlag, RegimeLabel, SeedStats,
};
pub use dataset::{
    load_reference_dataset, reference_constant, ReferenceConstant, ReferenceDataset,
    DATASET_TOKENS, REFERENCE_BUDGETS, REFERENCE_CONSTANTS,
};
pub use domain::{
    aspect_ratio, derive_dims, validate_config_table, DomainError, ModelConfig, PowerLawFit,
    RunGrid, RunRecord,
};
pub use hardware::{
    compute_scaling_exponent, epochs, fit_throughput, flops, rtx4090, throughput_at,
    tokens_processed, HardwareError, HardwareProfile, ThroughputEstimate, ThroughputLaw,
};
pub use ingest::{
    parse_hardware_profile, parse_runs, serialize_runs, IngestError, IngestIssue, IssueSeverity,
    RunFormat,
};
pub use planner::{
    comparison_table, guidelines_table, recommend, scaling_ratio, ComparisonRow, GuidelineRow,
    PlanError, PlanRecommendation, COMPARISON_MULTIPLIERS,
};
pub use powerlaw::{
    bootstrap_ci, evaluate, fit_depth_law, fit_loss_law, fit_optimal_size_law, fit_power_law,
    fit_power_law_units, prefix_fits, sensitivity_suite, FitError, SensitivityFit,
    SensitivitySuite, TieMode, TiePolicy, DEFAULT_EPSILON_BPB,
};
pub use sim::{
    calibrate, effective_data, loss_at_tokens, simulated_loss, sweep, Calibration, SimError,
    SimParams, SimResult, SHIPPED_RMSE, UNLIMITED_DATA,
};
