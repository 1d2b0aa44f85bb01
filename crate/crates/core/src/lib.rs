//! Biased random walks on Galton-Watson trees.
//!
//! * [`offspring`]: finite offspring laws, extinction probability, thresholds.
//! * [`tree`]: arena storage of one quenched tree, grown lazily or to a depth.
//! * [`beta`]: escape probabilities `β_n`, their λ-derivatives, sample pools
//!   and bound checks.
//! * [`network`]: the electric-network view and regular-tree closed forms.
//! * [`walker`]: walk simulation, speed and hitting-probability Monte Carlo.
//! * [`speed`]: the annealed speed formula, the strict-decrease criterion and
//!   speed curves with common random numbers.
//! * [`cli`]: the `gwspeed` command line.

pub mod beta;
pub mod cli;
pub mod error;
pub mod fmt;
pub mod network;
pub mod offspring;
pub mod rng;
pub mod speed;
pub mod stats;
pub mod tree;
pub mod walker;

pub use beta::{
    beta_derivative_path_sum, check_bounds, compute_beta, compute_beta_derivative,
    compute_beta_with_derivative, sample_pool, sample_pools, BetaPool, BetaTable, BoundReport,
    Genealogy, PoolMethod,
};
pub use error::{Error, Result};
pub use network::{
    build_conductances, conductance_sandwich, effective_conductance_to_level,
    regular_effective_conductance, regular_escape_probability, regular_return_gf,
    WeightedTreeNetwork,
};
pub use offspring::{monotonicity_threshold_for, OffspringDistribution};
pub use speed::{
    inequality8, speed_curve, speed_exact_lambda1, speed_formula_from_tuples, speed_formula_mc,
    CurveOptions, Ineq8Report, MonotonicityReport, SpeedCurve, SpeedCurvePoint,
    SpeedFormulaEstimate, TupleDraws, TuplePool,
};
pub use tree::{QuenchedTree, VertexId};
pub use walker::{
    hitting_beta_mc, lemma0_compare, simulate_speed, transition_step, Graph, HitEstimate,
    HittingSource, SpeedEstimate, StartComparison, WalkState,
};
