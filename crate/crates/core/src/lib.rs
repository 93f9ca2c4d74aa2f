pub mod cli;
pub mod data;
pub mod estimators;
pub mod fixtures;
pub mod graph;
pub mod ident;
pub mod missing;
pub mod scm;
pub mod study;
pub mod tables;
