//! Multi-view street-tree cataloging.
//!
//! The pipeline turns per-view detector proposals (aerial tiles and
//! street-level panoramas) into a geographic tree catalog: proposals are
//! projected to geographic space, pooled, re-scored in every view, fused by
//! a four-potential CRF (aerial, street, spatial context, map prior) with
//! piecewise-trained parameters, and decoded with greedy MAP inference.
//! Evaluation covers geographic detection matching, PR/mAP, species metrics,
//! and change-tracking confusion matrices; a seeded synthetic-scene
//! generator provides desk-scale benchmarks with brute-force oracles.

pub mod change;
pub mod crf;
pub mod eval;
pub mod fusion;
pub mod geo;
pub mod map_prior;
pub mod score;
pub mod species;
pub mod store;
pub mod synth;
