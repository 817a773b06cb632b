//! Rating, explanation and citation (REC) toolkit for LLM auto-evaluation.
//!
//! The crate covers the whole loop around an evaluator model: building the
//! prompts, parsing its structured JSON replies, checking that every citation
//! is copied verbatim from its source, rendering citations for people to read,
//! scoring predictions against human annotations, and curating synthetic
//! training data. Model calls go through [`gateway::Gateway`], which has an
//! HTTP implementation and a scripted mock.

pub mod datagen;
pub mod gateway;
pub mod metrics;
pub mod model;
pub mod prompt;
pub mod render;
pub mod schema;
pub mod tokens;
pub mod verify;
