//! Solver toolkit for the single-track railway delay-and-conflict
//! management problem: a time-indexed 0-1 model compiled to QUBO/Ising via
//! penalty methods, solved by exact enumeration, simulated annealing, an
//! exact precedence-order solver, and classical dispatching heuristics.

pub mod constraints;
pub mod io;
pub mod model;
pub mod qubo;
pub mod solvers;

pub use constraints::{check_capacity, ConstraintSet, VariableIndex};
pub use model::{
    Block, BlockId, BlockKind, DelayDomains, Direction, RailwayInstance, Schedule, Train,
    UnavoidableDelays,
};
pub use qubo::{build_qubo, IsingInstance, QuboInstance};
pub use solvers::{SolveError, SolverReport};
