//! Region-level recourse verification for linear classifiers.

pub mod audit;
pub mod lp;
pub mod model;
pub mod rational;
pub mod rep;
pub mod verifier;
