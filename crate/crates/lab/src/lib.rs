//! Scenario files, generators, the evaluation runner and reporting for
//! [`adl_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csv_io;
pub mod error;
pub mod generate;
pub mod report;
pub mod runner;

pub use error::{LabError, Result};
