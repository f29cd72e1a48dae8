//! Walsh-domain ultrawideband link simulator.
//!
//! The crate models a wideband link whose physical layer rides on a
//! sequency-ordered Walsh transform, coexisting with a narrower CP-OFDM
//! interferer. It provides:
//!
//! - [`walsh`] — orthonormal Walsh bases, dense and fast transforms;
//! - [`ofdm`] — the interfering CP-OFDM waveform and its placement at the
//!   system rate (via the [`resample`] polyphase machinery);
//! - [`fingerprint`] — Walsh-domain interference masks and concentration
//!   scores extracted from captures;
//! - [`channel`] — AWGN plus mask-shaped Gaussian interference on
//!   Walsh-domain codewords;
//! - [`autoencoder`] — a hand-rolled encoder/decoder pair trained end to end
//!   through the channel;
//! - [`evaluation`] — Monte-Carlo BLER curves, frequency sweeps and
//!   ICI-rejection sweeps with reproducible counter-based randomness;
//! - [`persist`] — run configuration, artifact files and run manifests;
//! - [`cli`] — the `walshlink` command-line driver.
//!
//! The `examples/` directory walks through each capability end to end; the
//! thin `walshlink` binary chains them into full experiment runs.

pub mod autoencoder;
pub mod channel;
pub mod error;
pub mod evaluation;
pub mod fingerprint;
pub mod ofdm;
pub mod resample;
pub mod spectrum;
pub mod walsh;

pub use error::{Error, Result};
