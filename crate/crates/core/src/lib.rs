//! Leak-robust single-molecule detection in population protocols.
//!
//! - [`model`]: species, ordered-pair transition tables, catalytic classification
//! - [`parser`]: the `.pp` text format
//! - [`detect`]: the detection protocol generators and initial configurations
//! - [`sim`]: the stochastic scheduler with leaks, batch runs and exports
//! - [`analysis`]: stationary level profiles and the exact small-`n` chain
//! - [`convergence`]: potential decay, distances to stationarity, convergence time

pub mod analysis;
pub mod convergence;
pub mod detect;
pub mod model;
pub mod parser;
pub mod sim;

pub use analysis::{AnalysisError, ExactChain, StationaryProfile};
pub use detect::{
    build_robust_detect, build_truncated_ideal, initial_configuration, DetectError, DetectParams,
    InitialState,
};
pub use model::{
    CatalyticPartition, NamedReaction, Output, Protocol, ProtocolError, Reaction, Species,
    SpeciesDecl, SpeciesId,
};
pub use parser::{parse, serialize, ParseError};
pub use sim::{
    Configuration, LeakModel, LeakStrategy, SimError, SimParams, Trajectory,
};
