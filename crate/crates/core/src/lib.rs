//! Simulation toolkit for vector cocycles over ergodic dynamical systems.

pub mod acceptance;
pub mod brownian;
pub mod config;
pub mod directions;
pub mod driver;
pub mod engine;
pub mod exec;
pub mod filling;
pub mod inducer;
pub mod runner;
pub mod sojourn;
pub mod stats;
pub mod vector;
