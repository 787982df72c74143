//! Lower bounds on the chromatic number of sparse random graphs.
//!
//! The crate evaluates the complexity functional of the random `d`-regular
//! graph and its variational counterpart for the binomial random graph,
//! locates the degrees at which they turn negative, and emits certificates
//! that `chi(G) > q` with high probability. Around that core sit a few
//! verification tools: an exact Potts partition-function oracle for small
//! multigraphs, samplers for the random graph models, Monte Carlo checks of
//! the Poisson-Dirichlet averaging identity and of the zero-temperature limit,
//! and the large-`q` expansions.

pub mod asymptotics;
pub mod binomial;
pub mod cli;
pub mod error;
pub mod graphs;
pub mod interpolation;
pub mod model;
pub mod numerics;
pub mod potts;
pub mod regular;

pub use error::{Error, Result};
pub use model::{
    validate_distribution, Atom, AtomDistribution, Certificate, EvalResult, ModelKind, ModelParams,
    Provenance,
};
