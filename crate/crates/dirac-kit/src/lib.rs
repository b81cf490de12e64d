//! Dirac structures, symmetry reduction, and constrained mechanics on
//! coordinate charts.
//!
//! The crate computes with concrete coordinate expressions throughout: every
//! field evaluates to a second-order jet, linear-algebra questions about
//! distributions become tolerance-aware subspace computations at seeded
//! sample points, and the constant-rank hypotheses of the underlying theory
//! become sampled-rank assertions that fail loudly when violated.
//!
//! Start from [`catalog`] for the built-in benchmark systems, [`report`] for
//! the analysis pipeline, or the `examples/` directory for runnable tours of
//! each capability.

pub mod catalog;
pub mod chart;
pub mod config;
pub mod dirac;
pub mod error;
pub mod expr;
pub mod field;
mod frames;
pub mod jet;
pub mod nonholonomic;
pub mod reduction;
pub mod report;
pub mod subspace;
pub mod verify;

pub use chart::Chart;
pub use dirac::{
    courant_bracket, graph_of_bivector, graph_of_bivector_full, graph_of_two_form,
    graph_of_two_form_full, pontryagin_pairing, DiracStructure, LevelSet, PontryaginSection,
};
pub use error::{Error, Result};
pub use field::{
    d_two_form_contract, exterior_derivative, lie_bracket, lie_derivative_one_form, OneForm,
    PointMap, ScalarField, TwoForm, VectorField,
};
pub use jet::Jet2;
pub use reduction::{
    check_dirac_invariance, d_cap_k_perp, is_descending_field, reduce_dirac, verify_method_b,
    QuotientChart, SymmetryAction,
};
pub use subspace::Subspace;
