pub mod cli;
pub mod depgraph;
pub mod diagnostics;
pub mod metrics;
pub mod splitter;
