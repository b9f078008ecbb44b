pub mod budget;
pub mod builtin;
pub mod cli;
pub mod error;
pub mod info;
pub mod output;
pub mod prob;
pub mod regions;
pub mod rng;
pub mod softcover;
pub mod synthesis;
