//! Test input prioritization for deep neural networks.
//!
//! Given recorded activation traces and softmax outputs of a model on a
//! training and a test set, this crate ranks the test inputs so that
//! misclassified ones come first. Three families of approaches are
//! provided:
//!
//! * neuron coverage ([`coverage`]) turned into orderings by the
//!   coverage-total or coverage-additional method ([`prioritize`]);
//! * surprise adequacy ([`surprise`]), used directly as a score or
//!   bucketized into surprise coverage;
//! * softmax and dropout uncertainty ([`uncertainty`]).
//!
//! Rankings are evaluated with APFD and active-learning selection, and
//! approaches are compared across runs with Wilcoxon tests and the
//! Vargha-Delaney effect size ([`eval`]). [`experiment`] drives whole
//! experiments from a JSON configuration; [`cli`] is its command-line
//! front end.

pub mod bitmatrix;
pub mod cli;
pub mod coverage;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod prioritize;
pub mod surprise;
pub mod synthetic;
pub mod uncertainty;

pub use error::{Error, Result};
