//! Incremental constituency parsing with the attach-juxtapose transition
//! system: one action per token, each growing the rightmost chain of a
//! single partial tree.

pub mod enumerate;
pub mod eval;
pub mod isr;
pub mod oracle;
pub mod predictor;
pub mod synth;
pub mod transition;
pub mod tree;
pub mod treebank;
