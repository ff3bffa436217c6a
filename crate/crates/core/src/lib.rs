//! Safety certificates for monotone discrete-time systems built from
//! finitely many recorded trajectories.
//!
//! Trajectories define dominance functions that are combined into barrier
//! certificates; the coefficients are found by linear programming over a
//! grid partition of the initial and unsafe sets.

pub mod certify;
pub mod dominance;
pub mod error;
pub mod order;
pub mod partition;
pub mod solver;
pub mod systems;
pub mod validate;

pub use error::{Error, Result};
pub use order::{box_contains, leq, partial_leq, shift, sup_dist, BoxRegion, RegionSpec, StateVector};
pub use systems::{
    simulate, FeedbackPolicy, InputRole, InputSource, LipschitzBounds, SystemModel,
    SystemSpec, TailInfo, Trajectory,
};
pub use dominance::{
    dominance_value, lambda_schedule, BasisKind, DominanceBasis, DominanceTime, InflationSchedule,
    DEFAULT_ALPHA,
};
pub use partition::{build_partition, CellIndex, CoverSets, GridPartition};
pub use certify::{
    eval_certificate, eval_inclusion, CertificateMode, CertificateTemplate, ConstraintSystem,
    ControllerSet, SupportPattern,
};
pub use solver::{solve_cspop, solve_cspop_milp, solve_rspop, CspopOutcome, LossSpec, SolveResult, SolverOptions};
pub use validate::{monte_carlo_safety, monte_carlo_shielded, SafetyReport};
