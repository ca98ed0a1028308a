pub mod accounting;
pub mod channel;
pub mod config;
pub mod error;
pub mod esprit;
pub mod linalg;
pub mod metrics;
pub mod montecarlo;
pub mod omp;
pub mod reconstruction;
pub mod training;
