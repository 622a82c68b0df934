//! Batch engine for evaluating rule-governed moderation decisions by
//! auditing reasoning traces: probabilistic defensibility signals from token
//! logprobs, MLE-calibrated correctness probabilities, DI/AI aggregation,
//! governance gating, Monte Carlo stability analysis, and lexical grounding
//! verification of cited rules.

pub mod calibration;
pub mod dataset;
pub mod gate;
pub mod metrics;
pub mod parser;
pub mod pds;
pub mod record;
pub mod simulator;
pub mod stability;
pub mod verifier;
