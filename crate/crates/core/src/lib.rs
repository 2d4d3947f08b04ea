//! Noise analysis of a two-player nonlocal game played with a shared
//! four-qubit entangled state.
//!
//! The crate computes how correlated ("memory") noise on the shared state
//! changes the players' winning probability, checks the numbers against
//! closed-form expressions, and identifies a noise family from observed
//! success rates.
//!
//! ```
//! use msgame::{mean_success, ChannelKind, ChannelSpec};
//!
//! let spec = ChannelSpec::new(ChannelKind::PhaseDamping, 0.0, 0.5).unwrap();
//! assert!((mean_success(&spec).unwrap() - 1.0).abs() < 1e-10);
//! ```

pub mod channels;
pub mod closedform;
pub mod discriminate;
pub mod error;
pub mod evaluate;
pub mod game;
pub mod qcore;

pub use channels::{apply_channel, four_qubit_kraus, ChannelKind, ChannelSpec, MemoryModel};
pub use closedform::{cf_fingerprint, cf_mean, cf_success, verify, VerifyReport};
pub use discriminate::{
    classify, estimate_from_samples, fingerprint, Estimate, Fingerprint, Source,
};
pub use error::{Error, Result};
pub use evaluate::{
    mean_success, sample_plays, success_probabilities, success_probability, sweep, SweepPoint,
};
pub use game::GameInput;
pub use qcore::{ComplexMatrix, DensityMatrix, KrausSet, StateVector};
