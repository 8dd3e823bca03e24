//! File formats, parallel drivers and the `hypercyc` command line.

pub mod io;
pub mod parallel;
pub mod parse;
pub mod report;
pub mod run;
