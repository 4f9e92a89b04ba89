//! Std companion to `feedrank-core`: file formats, the durable feedback log,
//! configuration, the synthetic evaluation suite, experiments and the HTTP
//! service.

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod names;
pub mod repository;
pub mod service;
pub mod synth;
pub mod workspace;

pub use error::{AppError, Result};
