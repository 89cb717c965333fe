pub mod augmentation;
pub mod cli;
pub mod dataset;
pub mod evaluation;
pub mod geometry;
pub mod report;
pub mod rng;
