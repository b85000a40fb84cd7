pub mod cli;
pub mod format;
pub mod parallel;
pub mod perturb;
pub mod report;
