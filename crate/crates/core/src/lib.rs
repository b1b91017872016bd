//! ParaGraph: weighted, typed program graphs for OpenMP kernels and a
//! relational graph-attention model that predicts kernel runtime from them.
//!
//! The crate follows the data flow of the pipeline:
//!
//! - [`frontend`] parses a C subset with OpenMP pragmas into a Clang-style AST.
//! - [`paragraph`] augments the AST with typed edges and execution-count
//!   weights.
//! - [`variantgen`] rewrites a serial kernel into its six OpenMP variants.
//! - [`dataset`] pairs graphs with runtime labels, scales and splits them.
//! - [`gnn`] is the RGAT regressor with hand-written gradients and Adam.
//! - [`eval`] computes RMSE-style metrics and runs the three-mode ablation.
//! - [`pipeline`] chains every stage from one config file.
//!
//! Batch work (per-sample gradients, graph construction, ablation runs) goes
//! through [`par`], which uses rayon when the `parallel` feature is on and a
//! plain loop otherwise.

pub mod dataset;
pub mod eval;
pub mod frontend;
pub mod gnn;
pub mod par;
pub mod paragraph;
pub mod pipeline;
pub mod variantgen;
