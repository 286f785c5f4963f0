//! Exact design and verification of real-time variable-rate source codes.
//!
//! A discrete Markov source is encoded symbol by symbol, entropy coded given
//! the decoder state, and reproduced by a finite-state decoder that may also
//! see causal side information. The cost is the average of
//! `distortion + lambda * codeword length` over a finite horizon.
//!
//! The crate evaluates this cost exactly for any encoder/decoder tables,
//! searches the finite policy classes exhaustively, solves the belief-state
//! dynamic program for infinite-memory decoders and checks the structural
//! properties (deterministic tracking encoders are optimal, sliding-window
//! memories lose at most `lambda * log2|Z| / l`, and the side-information
//! counterparts) on small instances.

pub mod error;
pub mod grid;
pub mod instances;
pub mod length;
pub mod mdp;
pub mod model;
pub mod montecarlo;
pub mod search;
pub mod system;

pub use error::{Error, Result};
pub use grid::Grid;
pub use length::{LengthFunction, huffman_expected_length, kraft_check};
pub use model::{Matrix, ProblemSpec};
pub use montecarlo::{SimResult, simulate};
pub use search::{SearchResult, TheoremReport};
pub use system::{Belief, CostReport, DecoderPolicy, EncoderPolicy, JointState, MemoryUpdate};

/// Tolerance used when comparing derived probabilities and costs.
pub const TOLERANCE: f64 = 1e-9;

/// Default cap on enumerated candidates for every exhaustive routine.
pub const DEFAULT_BUDGET: u64 = 10_000_000;
