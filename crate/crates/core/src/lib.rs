#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod numerics;
pub mod corpus;
pub mod embedder;
pub mod model;
pub mod fixtures;
pub mod trainer;
pub mod evaluator;
