//! On-policy training: rollout collection, advantage estimation, the
//! three policy-update rules (clipped surrogate, trust region, vanilla
//! policy gradient), value-function fitting, and the driver loop that
//! ties them together.

pub mod adam;
pub mod cg;
pub mod config;
pub mod driver;
pub mod gae;
pub mod graphs;
pub mod ppo;
pub mod rollout;
pub mod trpo;
pub mod value;
pub mod vpg;

pub use adam::Adam;
pub use cg::{conjugate_gradient, CgResult};
pub use config::{Algo, AlgoConfig};
pub use driver::{IterationDiagnostics, TrainOutcome, Trainer};
pub use gae::{gae, normalize_advantages, AdvantageEstimate};
pub use graphs::{clipped_term, ScaledKlObjective, ScoreObjective, SurrogateObjective};
pub use ppo::ppo_update;
pub use rollout::{Collector, RolloutBatch};
pub use trpo::trpo_update;
pub use value::{value_fit, ValueFitReport, ValueNet};
pub use vpg::vanilla_pg_update;

/// What a policy update reports back to the driver, common to all three
/// update rules. Fields that do not apply to a rule hold neutral values
/// (clip fraction 0 outside the clipped objective, `rejected` false
/// outside the trust-region rule).
pub struct UpdateReport {
    /// Importance-weighted (and, for the clipped rule, clipped) advantage
    /// objective measured after the update.
    pub surrogate: f64,
    /// Mean closed-form KL from the behavior policy to the updated policy.
    pub kl: f64,
    /// Fraction of likelihood ratios outside the clip band.
    pub clip_fraction: f64,
    /// Mean policy entropy after the update.
    pub entropy: f64,
    /// Surrogate gain over the behavior parameters.
    pub improvement: f64,
    /// True when the trust-region line search failed and the behavior
    /// parameters were restored, or the gradient was identically zero.
    pub rejected: bool,
}
