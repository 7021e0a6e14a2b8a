//! Metaphor detection in political social-media posts and the engagement
//! studies built on top of it.

pub mod conllu;
pub mod corpus;
pub mod dataset;
pub mod embedding;
pub mod engagement;
pub mod error;
pub mod extract;
pub mod net;
pub mod scorer;
pub mod stats;
pub mod study;

pub use error::{Error, Result};
