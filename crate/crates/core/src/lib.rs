//! Core of the N2F benchmark toolkit: the typed formal language, scheme
//! enumeration, sample and task construction, answer checking, error
//! classification and metrics.

pub mod checker;
pub mod classify;
pub mod config;
pub mod error;
pub mod formal;
pub mod metrics;
pub mod question;
pub mod sample;
pub mod scheme;
pub mod task;

pub use error::{Error, Result};
