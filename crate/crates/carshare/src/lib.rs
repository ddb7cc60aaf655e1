//! Solvers and exact verification tools for pairwise car-sharing allocation.
//!
//! A fleet of cars must serve ride requests, each a pickup/dropoff pair over a
//! symmetric travel-time metric, with every car serving a fixed number of
//! requests (two, unless generalized). The crate implements the match-and-assign
//! and transportation heuristics, their combination, generalized and
//! speed-aware variants, and a brute-force oracle that certifies empirical
//! approximation ratios on desk-scale instances.
//!
//! Modules mirror the pipeline: [`metric`] holds the travel-time matrix,
//! [`instances`] the problem data and fixtures, [`paircosts`] the serving-cost
//! formulas, [`matching`] the weighted matching engines, [`solvers`] the
//! allocation algorithms, and [`oracle`] exhaustive optima and ratio sweeps.

pub mod instances;
pub mod matching;
pub mod metric;
pub mod oracle;
pub mod paircosts;
pub mod solvers;

pub use instances::{Allocation, Car, Instance, Request, Visit};
pub use metric::{DistanceMatrix, EdgeGraph, LocationId, Time, DEFAULT_TOLERANCE};
pub use paircosts::{Flavor, Objective};
pub use solvers::{AlgoConfig, Alpha, SolveReport};
