//! Quality assessment for machine-learning systems.
//!
//! A [`qmodel::QualityModel`] arranges quality attributes under five views
//! (model, data, environment, system, infrastructure). Each attribute is either
//! a computed metric with an optional threshold or a checklist. The
//! [`evaluator`] binds a tailored model to loaded inputs, computes every
//! attribute, and renders a deterministic report whose gate status maps to a
//! process exit code.

pub mod canonical;
pub mod dataio;
pub mod error;
pub mod evaluator;
pub mod exec;
pub mod metrics;
pub mod qmodel;
pub mod reflearner;
pub mod stats;

pub use error::{Error, Result};
pub use exec::ExecMode;
