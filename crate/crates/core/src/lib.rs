//! In-context configuration of fabricatable parametric designs.

pub mod design;
pub mod dsl;
pub mod environment;
pub mod ergonomics;
pub mod estimators;
pub mod geometry;
pub mod math;
pub mod service;
pub mod sketch;
