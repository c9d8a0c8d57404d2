//! Optimal randomized quantizers over finite alphabets: (P1) and (P3) as
//! linear programs over mixtures of deterministic maps.

mod columns;
mod experiment;
mod simplex;
mod solve;

pub use columns::{count_maps, enumerate_maps, enumerate_quantizers, CellShape, QuantizerColumn, ENUMERATION_CAP};
pub use experiment::{finite_randomization_experiment, regression_slope, RandomizationRow, RandomizationTable};
pub use simplex::{solve_lp, Constraint, LinearProgram, LpOutcome, LpStatus, Relation};
pub use solve::{p1_vs_ot_check, solve_p1, solve_p3, BridgeReport, LpSolution};
