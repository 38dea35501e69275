//! Resource balance analysis.
//!
//! Steady-state growth of a cell is posed as a family of linear feasibility
//! problems indexed by the growth rate μ. The crate compiles text models into
//! dense matrices ([`model`]), assembles the prokaryotic, turnover and
//! compartmented problems ([`assembly`]), solves them with a bounded simplex
//! ([`lp`]) and finds the maximal feasible growth rate ([`growth`]).
//!
//! A second part treats the dynamic allocation problem of a two-pool
//! self-replicator: forward simulation ([`ocp`]) and a Pontryagin
//! forward–backward sweep with a steady-state envelope check ([`pmp`]).

pub mod assembly;
pub mod golden;
pub mod growth;
pub mod lp;
pub mod model;
pub mod ocp;
pub mod pmp;
pub mod random;

pub use assembly::{
    assemble, assemble_eukaryotic, assemble_prokaryotic, assemble_turnover, build_turnover_matrices,
    EukaryoticExtension, Problem, TurnoverMatrices, TurnoverSpec,
};
pub use growth::{feasibility_profile, mu_max, GrowthError, GrowthSearchOptions, GrowthSearchResult, GrowthStatus};
pub use lp::{check_point, solve, LinearProgram, LpError, SolveOptions, SolveResult, SolveStatus};
pub use model::{compile, expand_duplications, load_model, Dimensions, MetabolicModel, ModelError, RawModelSpec};
pub use ocp::{ControlSignal, FluxMode, OcpError, ToyParams, ToyState, Trajectory};
pub use pmp::{AdjointState, EnvelopeReport, SweepOptions, SweepResult};
