//! Generators and brute-force oracles shared by the property suites and the
//! acceptance runner.
#![allow(dead_code)]

pub mod crawler;
pub mod intermediary;
pub mod parser;
pub mod pooling;
