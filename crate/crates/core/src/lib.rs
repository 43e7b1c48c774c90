//! Fuzzy modeling by recursive plane decomposition, in two flavors:
//!
//! * ALM — diffuses projected data with a pyramid kernel (ink drop spread)
//!   and extracts per-column delegates by center of gravity.
//! * EALM — replaces diffusion with morphological thickening and delegate
//!   extraction with thinning to a skeleton, then splits multi-valued
//!   planes along a horizontal line and a linear separator fitted in an
//!   input-input plane.
//!
//! The crate also ships the benchmark generators and the train/test
//! protocol used to compare the two pipelines.

pub mod bench;
pub mod error;
pub mod grid;
pub mod idscog;
pub mod io;
pub mod modeling;
pub mod morphology;
pub mod rng;

pub use error::EalmError;
pub use grid::{BinaryGrid, DataPlane, Dataset, GridSpec, PlaneKind};
pub use idscog::{IdsMode, IdsParams, NarrowPath};
pub use modeling::{
    AlmConfig, EalmConfig, MembershipFunction, Method, PathModel, Rule, RuleBase, Split,
};
pub use morphology::{Cell, SEChain, StructuringElement};
