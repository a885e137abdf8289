//! Action grids, the five policy heads, and their distribution calculus.

pub mod dist;
pub mod grid;
pub mod ordinal;
pub mod policy;

pub use dist::{beta_draw, ActionSample, DimDist, HeadKind, PolicyDistribution};
pub use grid::ActionGrid;
pub use ordinal::{cumulative_target, one_hot, ordinal_transform, stable_cross_entropy, CE_EPS};
pub use policy::{PolicyConfig, PolicyNet, PolicyNodes, BETA_PARAM_CAP};
