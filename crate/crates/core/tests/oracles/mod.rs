//! Independent reference implementations used only by tests.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod metrics;
pub mod qp;
pub mod spline;
