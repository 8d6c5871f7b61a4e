pub mod analysis;
pub mod config;
pub mod error;
pub mod export;
pub mod field;
pub mod geometry;
pub mod pipeline;
pub mod solver;
pub mod synthesis;
pub mod validate;
pub mod wavefront;
