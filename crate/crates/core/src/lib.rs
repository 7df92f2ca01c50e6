pub mod benchmark;
pub mod model;
pub mod rows;
pub mod simulation;
pub mod synthesis;
pub mod verification;
pub mod config;
pub mod cli;
