//! Prompted policy search laboratory.
//!
//! An LLM (or a deterministic scripted stand-in) proposes policy parameters from a
//! prompt carrying the full parameter/reward history; the harness evaluates them on
//! native environments or shifted benchmark objectives and compares against classical
//! derivative-free and gradient baselines.
//!
//! Module map:
//! - [`envs`]: seed-deterministic implementations of the nine native environments.
//! - [`policies`]: linear argmax, affine and tabular policies over a flat [`ParamVector`].
//! - [`reprext`]: random orthonormal projections, small MLP policies and DMP trajectories.
//! - [`prompt`]: template rendering, history formatting and response parsing.
//! - [`llm`]: completion providers (HTTP, replay, scripted).
//! - [`search`]: the propose/evaluate/record optimization loop.
//! - [`numopt`]: benchmark objectives with gradients and baseline optimizers.
//! - [`runner`]: config-driven experiments, persistence, summaries and replay.

pub mod envs;
pub mod llm;
pub mod numopt;
pub mod policies;
pub mod prompt;
pub mod reprext;
pub mod runner;
pub mod search;
pub mod seeding;

pub use policies::ParamVector;
