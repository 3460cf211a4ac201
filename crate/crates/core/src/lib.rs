//! A desk-scale laboratory for sofic and amenable entropy of subshifts over
//! finitely generated groups.

pub mod cli;
pub mod covers;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod group;
pub mod measure;
pub mod microstates;
pub mod sofic;
pub mod symbolic;
pub mod tiling;

pub use error::{Error, Result};
