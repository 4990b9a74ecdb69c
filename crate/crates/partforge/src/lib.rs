//! Part-assembly planning and learning toolkit.
//!
//! Procedurally generated chair assets with ground-truth assemblies, an
//! object-centric assembly environment, an RRT-Connect planner for both
//! per-step mating queries and a whole-assembly baseline, and a from-scratch
//! learning stack (point-cloud autoencoder, masked Double-DQN, multi-task
//! distillation).

pub mod assets;
pub mod cli;
pub mod geom;

pub mod env;
pub mod learn;
pub mod par;
pub mod planner;
