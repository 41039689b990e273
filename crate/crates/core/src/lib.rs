//! LDPC-coded transmission over the T-user binary-input Gaussian multiple
//! access channel.
//!
//! The crate is organised around the decoding pipeline:
//!
//! * [`protograph`] builds codes: base matrices, circulant lifting, GF(2)
//!   encoders, alist exchange and the bit-repetition baseline.
//! * [`ldpc`] holds the single-user sum-product primitives and decoder.
//! * [`gmac`] models the multiple access channel and runs the joint
//!   decoder over variable, check and functional (state) nodes.
//! * [`pexit`] predicts decoding thresholds with protograph EXIT analysis.
//! * [`optimizer`] searches base matrices for low thresholds.
//! * [`spreading`] places users onto slot chips with sparse signatures.
//! * [`sim`] measures frame error rates; [`cli`] drives everything from
//!   JSON config files.

pub mod cli;
pub mod error;
pub mod gmac;
pub mod ldpc;
pub mod optimizer;
pub mod pexit;
pub mod protograph;
pub mod rng;
pub mod sim;
pub mod spreading;

pub use error::{Error, Result};
pub use gmac::{ChannelConfig, JointDecoder, JointFactorGraph, Schedule};
pub use ldpc::{BpDecoder, LLR_MAX};
pub use pexit::{Estimator, JTable};
pub use protograph::{LiftedCode, Protograph};
pub use sim::{run_fer_sweep, FerPoint, SimConfig};
pub use spreading::SpreadingSignature;
