//! partkit: a desk-scale toolkit for language-guided articulated-object
//! manipulation. Action programs describe part-level strategies; joint
//! parameters are estimated from observed part motion; a kinematic
//! simulator with latches and effects executes trajectories; a replanning
//! global planner closes the loop and a benchmark harness scores it.

pub mod action_program;
pub mod bench;
pub mod fixtures;
pub mod geometry;
pub mod http;
pub mod joint_estimation;
pub mod part_grounding;
pub mod planner;
pub mod scene_model;
pub mod simulator;
pub mod trajectory;
