//! Regularization by Lovász extensions of normalized submodular set functions.
//!
//! The crate covers set-function oracles ([`setfn`]), the Lovász extension and
//! base polyhedron ([`lovasz`]), submodular minimization ([`sfm`], [`mnp`],
//! [`flow`]), proximal operators ([`prox`]), first-order solvers and
//! regularization paths ([`solver`], [`path`]), and level-set recovery
//! experiments ([`recovery`]). The `levelreg` binary in [`cli`] drives them from files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod flow;
pub mod io;
pub mod lattice;
pub mod lovasz;
pub mod mnp;
pub mod path;
pub mod prox;
pub mod recovery;
pub mod setfn;
pub mod sfm;
pub mod solver;
pub mod svg;

pub use error::{Error, Result};
pub use lattice::OrderedPartition;
pub use lovasz::BasePoint;
pub use prox::{ProxEngine, ProxSolution};
pub use setfn::{CardinalityProfile, NoisyCutSpec, SetFunction, SubsetMask, WeightedGraph};
pub use sfm::{SfmEngine, SfmResult};
