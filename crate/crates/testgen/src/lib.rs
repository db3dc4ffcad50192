//! Iterative multi-modal agent pipeline that turns natural-language task
//! goals into executable GUI action sequences and replayable regression test
//! scripts, running deterministically against a simulated device and a
//! scripted completion oracle.

pub mod app_model;
pub mod agent;
pub mod cli;
pub mod exec;
pub mod gateway;
pub mod metrics;
pub mod ranker;
pub mod script;
