//! Construction and verification of theta-graph designs.
//!
//! A theta graph `Θ(a,b,c)` is two vertices joined by three internally
//! disjoint paths of lengths `a`, `b` and `c`. A design of order `n` is a
//! partition of the edges of `K_n` into copies of it. This crate ships a
//! catalogue of base-block decompositions, develops them under cyclic
//! actions, builds larger designs recursively from group divisible designs,
//! searches for missing ingredients, and checks every result as an exact
//! edge partition.

pub mod action;
pub mod catalogue;
pub mod construct;
pub mod gdd;
pub mod search;
pub mod theta;
pub mod verify;

pub use action::{develop, ActionError, Decomposition, GroupAction, Wheel};
pub use catalogue::{Catalogue, CatalogueEntry, CatalogueError};
pub use theta::{
    block_edges, copy_counts, enumerate_thetas, make_theta, necessary_conditions, spectrum_membership, Edge,
    HostGraph, HostShape, Point, ThetaBlock, ThetaError, ThetaGraph,
};
pub use verify::{oracle_verify, verify_decomposition, verify_gdd_certificate, Certificate, Verdict, ViolationKind};
pub use construct::{
    construct, execute, inflate, plan, realize_master, spectrum_table, ConstructError, ConstructionPlan, Context,
    Inflation, Master, Step,
};
pub use gdd::{extend_with_group, Gdd, GddError, GddProvider, ResolvableGdd};
pub use search::{cost, resume, search, Budget, SearchError, SearchProblem};
