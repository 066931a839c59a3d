pub mod analytics;
pub mod cli;
pub mod domain;
pub mod engine;
pub mod experiment;
pub mod io;
pub mod policies;
