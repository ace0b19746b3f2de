//! Error-revealing unit test generation and test-validated debugging.
//!
//! The crate generates unit tests for a candidate program with a language
//! model, predicts their expected outputs by self-consistency voting, and
//! uses the resulting suites to drive multi-round debugging in which an edit
//! survives only if it raises the suite pass rate. The same machinery scores
//! test generators (attack rate, output accuracy), reranks best-of-N code
//! samples, and bootstraps training data.
//!
//! Candidate code runs in short-lived Python processes speaking a one-line
//! JSON protocol (see [`harness`]). Model calls go through [`gateway`], which
//! can play back scripted fixtures or replay a recorded cache so that every
//! pipeline is reproducible offline.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod commands;
pub mod debug;
pub mod error;
pub mod gateway;
pub mod harness;
pub mod literal;
pub mod metrics;
pub mod model;
pub mod parallel;
pub mod pipeline;
pub mod prompts;
pub mod runner;
pub mod testgen;

pub use error::{Error, Result};
