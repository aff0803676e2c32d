//! Evaluation of QKD network topologies: link key rates from a decoy-state
//! model, a flow program that bounds how much of a demand can be served
//! with information-theoretic security, and batch studies over node and
//! system placements.

pub mod cli;
pub mod evaluator;
pub mod files;
pub mod keyrate;
pub mod mcfp;
pub mod model;
pub mod solver;
