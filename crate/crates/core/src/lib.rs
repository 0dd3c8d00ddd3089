pub mod analysis;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod problem;
pub mod protocol;
pub mod solvers;
