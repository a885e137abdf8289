//! Reproducible scans over the policy-head design space: score-gradient
//! variance versus atom count, final performance versus discretization
//! capacity, wall-clock cost, and learning-rate sensitivity.
//!
//! Every scan is a pure function of its configuration and a single seed.
//! Cells derive their randomness from their own index, so sequential and
//! data-parallel execution produce bitwise-identical results, and a
//! failing cell is recorded (with the environment's minimum return as the
//! sentinel score where one is needed) without aborting its siblings.

mod capacity;
mod cost;
mod sensitivity;
mod variance;

pub use capacity::{capacity_scan, CapacityCell, CapacityScanConfig, CapacityScanResult};
pub use cost::{cost_scan, CostEntry, CostScanConfig, CostScanResult};
pub use sensitivity::{
    quantile_sorted, sensitivity_scan, SensitivityDraw, SensitivityScanConfig,
    SensitivitySummary, K_POOL, LOG10_LR_RANGE, SEED_POOL,
};
pub use variance::{
    theoretical_normalized, variance_at, variance_scan, VarianceScanConfig, VarianceScanResult,
    DEFAULT_ANCHOR,
};
