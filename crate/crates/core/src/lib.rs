//! Cube categories, Burnside functors with cyclic group actions, flow
//! categories and the Khovanov functor of periodic link diagrams.

pub mod actions;
pub mod burnside;
pub mod corpus;
pub mod cube;
pub mod error;
pub mod flowcat;
pub mod generate;
pub mod input;
pub mod khovanov;
pub mod linalg;
pub mod periodic;
pub mod realize;
pub mod report;
pub mod suites;

pub use error::{Error, Result};
