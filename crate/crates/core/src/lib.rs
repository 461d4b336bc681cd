//! Local differential privacy protocols modelled as information-flow
//! channels.
//!
//! - [`channel`]: stochastic matrices, priors, gain functions, hypers.
//! - [`mechanisms`]: exact channels for GRR, SS, BLH, OLH, SUE, OUE and THE.
//! - [`leakage`]: vulnerabilities, Bayes capacity and its closed forms.
//! - [`refinement`]: 2x2 trade-off tests and LP refinement witnesses.
//! - [`simulate`]: samplers, reconstruction attacks and estimators.

pub mod channel;
pub mod error;
pub mod leakage;
pub mod mechanisms;
pub mod refinement;
pub mod simulate;

pub use channel::{posterior_hyper, ChannelMatrix, GainFunction, Hyper, Prior};
pub use error::{Error, Result};
pub use mechanisms::{BitwiseProtocol, MechanismSpec, Protocol};
