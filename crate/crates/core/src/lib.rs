//! Network-guided hierarchical interaction lasso for genotype data.

pub mod cli;
pub mod data;
pub mod error;
pub mod io;
pub mod meta;
pub mod network;
pub mod screening;
pub mod shrinkage;
pub mod simulation;
pub mod solver;
pub mod refit;
pub mod tuning;

pub use data::{standardize, CoefficientState, Dataset, StandardizedDesign, TermId};
pub use error::{Error, Result};
pub use network::WeightMatrix;
pub use solver::{fit, Solution, SolverConfig};
