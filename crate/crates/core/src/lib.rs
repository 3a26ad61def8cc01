//! Inequality constraints and causal-effect bounds for DAG models with latent
//! variables.
//!
//! The central criterion is e-separation: `A` and `B` are e-separated given
//! `C` after deletion of `D` when deleting the vertices in `D` leaves `A` and
//! `B` d-separated by `C`. Each such statement implies that, for every fixed
//! value of `D`, the observed slice `p(a, b, d | c)` is compatible with a
//! distribution in which `A ⊥ B | C`, and, when an edge `X -> Y` is the only
//! obstruction, bounds on `p(y | do(x, d), c)`.
//!
//! Modules:
//! - [`graph`], [`parse`]: DAGs with latent vertices and the text format.
//! - [`separation`]: d-separation and both forms of e-separation.
//! - [`table`], [`model`]: exact discrete tables and factorized models.
//! - [`constraints`]: the instrumental inequality and compatibility tests.
//! - [`bounds`]: interventional and controlled-direct-effect bounds.
//! - [`oracle`]: random models, grid search, and soundness sweeps.
//! - [`cli`]: the `esep` command line.

pub mod bounds;
pub mod cli;
pub mod constraints;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod parse;
pub mod separation;
pub mod table;

pub use error::{Error, Result};
pub use graph::{Dag, VertexId, VertexSet, Visibility};
pub use model::DiscreteModel;
pub use parse::parse_graph;
pub use table::{Assignment, JointTable};
