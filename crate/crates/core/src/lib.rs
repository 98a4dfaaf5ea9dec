//! Exact countably Markov interval functions: partitions, set-valued limits,
//! Markov and same-pattern checks, conjugating chains and inverse-limit clouds.

pub mod chain_file;
pub mod conjugacy;
pub mod document;
pub mod error;
pub mod function;
pub mod inverse_limit;
pub mod limits;
pub mod markov;
pub mod partition;
pub mod pattern;
pub mod render;
pub mod scalar;
pub mod set;
