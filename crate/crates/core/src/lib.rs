pub mod engine;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod nonmarkov;
pub mod runner;
