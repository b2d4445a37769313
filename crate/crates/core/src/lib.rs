pub mod cli;
pub mod dataflow;
pub mod learn;
pub mod perturb;
pub mod strategy;
pub mod syntax;
pub mod witnessing;
