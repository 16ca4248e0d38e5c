pub mod acoustics;
pub mod cli;
pub mod corpus_io;
pub mod error;
pub mod pipeline;
pub mod planner;
pub mod renderer;
pub mod stats;
pub mod synthetic;
pub mod turntaking;

pub use error::{Error, Result};
