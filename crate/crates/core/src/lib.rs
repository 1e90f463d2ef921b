//! Exact design, verification and comparison of ε-differentially private
//! mechanisms that publish a count over `N` binary respondents.
//!
//! States are counts `ω ∈ {0, …, N}`; databases are bit vectors indexed most
//! significant bit first. Priors must have full support.

pub mod cli;
pub mod decision;
pub mod design;
pub mod distribution;
pub mod error;
pub mod mechanisms;
pub mod model;
pub mod orders;
pub mod polytope;
pub mod simplex;

pub use decision::{
    full_information_value, interim_value, is_supermodular, no_information_value, SupermodularityViolation,
    ValueEvaluation,
};
pub use design::{
    build_signal_matrix, exponential_parameterization, signal_from_signatures, solve_database, solve_oblivious,
    weights_for_support, DatabaseDesign, DesignSolution, ExponentialParameterization, SignalMatrix, SupportWeights,
};
pub use distribution::BeliefDistribution;
pub use error::{Error, Result};
pub use mechanisms::{induced_distribution, mechanism_value, verify_dp, DpVerdict, ObliviousMechanism};
pub use model::{
    database_bits, database_index, project_belief, state_of_database, symmetric_prior_from_state_prior, Belief,
    DatabaseBelief, DatabasePrior, DecisionProblem, EpsilonBudget, StateBelief, StatePrior,
};
pub use orders::{
    frechet_representation, spm_dominates, supermodular_value_dominance, uprr_compare, FrechetRepresentation,
    PeakAssignment, SpmVerdict,
};
pub use polytope::{
    enumerate_database_vertices, enumerate_oblivious_vertices, projection_gap, DatabasePolytope, ObliviousPolytope,
    UpperBoundSignature,
};
