pub mod config;
pub mod context;
pub mod corpus;
pub mod error;
pub mod inference;
pub mod metrics;
pub mod pipeline;
pub mod promptgen;
pub mod report;
pub mod texflat;

pub use error::{Error, Result};
