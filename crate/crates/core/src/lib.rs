//! Finite models of measure-preserving equivalence relations, their graphings,
//! percolation on Cayley and Schreier windows, and entropy bookkeeping.

pub mod cluster;
pub mod coinduction;
pub mod entropy;
pub mod eqrel;
pub mod extension;
pub mod error;
pub mod graphing;
pub mod isoperimetric;
pub mod group;
pub mod instances;
pub mod percolation;
pub mod schramm;
pub mod spectral;
pub mod tolerance;
pub mod unionfind;
pub mod window;

pub use eqrel::{Automorphism, EqRel, ProbSpace, Weight};
pub use error::{Error, Result};
