//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

pub mod gradient;
pub mod rbf_checks;
pub mod svm_dual;
pub mod trace;
