//! Branch-and-bound reliability analysis of general coherent systems.
//!
//! The library identifies minimal failure and survival rules of a coherent
//! multi-state system by adaptive decomposition of its component state
//! space, computes exact failure probabilities, deterministic bounds, or
//! hybrid Bayesian estimates, and updates those estimates under new
//! component distributions without re-running the system function.
//!
//! The main entry points are [`engine::run_brc`], which alternates rule
//! discovery with decomposition until a terminal status, and
//! [`inference::evaluate_reliability`], which turns the resulting branch
//! set into a probability statement. System performance functions plug in
//! through [`engine::SystemFunction`]; ready-made network functions live in
//! [`sysfun`], and [`hazard`] maps seismic scenarios to component
//! marginals.

pub mod datasets;
pub mod decomposition;
pub mod engine;
mod error;
pub mod hazard;
pub mod inference;
pub mod model;
pub mod probability;
pub mod sysfun;

pub use error::{Error, Result};
