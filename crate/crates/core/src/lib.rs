//! Reinforcement-learned k-opt local search for the symmetric TSP.
//!
//! The pipeline is: parse an instance ([`tsplib`]), tighten the 1-tree bound with
//! node penalties and compute α-nearness ([`onetree`]), rank candidate edges by a
//! learned value ([`candidates`]), and improve tours with sequential k-opt moves
//! ([`kopt`]) whose edge choices are driven by tabular RL ([`policy`], [`solver`]).
//! [`bench`] runs seeded multi-run experiments and reports.

pub mod bench;
pub mod candidates;
pub mod kopt;
pub mod onetree;
pub mod policy;
pub mod solver;
pub mod tsplib;

pub use bench::{cumulative_gap, emit_report, gap, run_suite, Format, RunRecord, RunReport, SuiteConfig, SuiteResult};
pub use candidates::{init_q, Candidate, QTable};
pub use kopt::{apply_move, MoveState, Tour};
pub use onetree::{
    alpha_values, minimum_one_tree, penalized_cost, subgradient_ascent, AlphaTable, AscentConfig, OneTree,
    PenalizedCost, Penalties, PI_SCALE,
};
pub use policy::{Method, RLConfig, Strategy, StrategyState};
pub use solver::{
    initial_table, preprocess, solve, solve_with, ClosingRule, InitialTour, Preprocessed, RunResult, Search, SearchStats,
    SolverConfig, TrialRecord,
};
pub use tsplib::{load_instance, parse_instance, parse_tour, Instance, KnownOptima, Metric, ParseError, TourFile};
