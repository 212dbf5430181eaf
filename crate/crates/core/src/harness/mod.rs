//! Experiment engine.
