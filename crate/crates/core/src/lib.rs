//! Sorting networks of small depth.

pub mod cli;
pub mod eval;
pub mod netcore;
pub mod satcomp;
pub mod search;
pub mod symmetry;
