pub mod compactum;
pub mod experiment;
pub mod error;
pub mod flow;
pub mod graph;
pub mod limit;
pub mod linalg;
pub mod measures;
pub mod observables;
pub mod ordering;
pub mod random;
pub mod spectral;
pub mod stats;
pub mod tower;

pub use error::{Error, Result};
