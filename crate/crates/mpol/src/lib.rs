//! Test-time adaptation for mask-based speech enhancement.
//!
//! A small mask-estimation network trained on one noise condition tends to
//! produce washed-out, unimodal masks when the noise changes. This crate
//! restores the bimodal keep/suppress shape of the mask distribution at
//! inference time: each utterance supplies its own polarized reference mask
//! (built from the network's current output and a noise-floor estimate), and
//! a sorted-difference transport loss plus a negative-shelf penalty drives a
//! handful of updates to the normalization and output parameters, blended
//! back toward the pretrained weights after every step.
//!
//! The pipeline, end to end: [`dsp::stft`] → [`model::MaskNet::forward`] →
//! [`dsp::apply_mask`] → [`reference::reference_mask`] → [`loss::mpol_loss`]
//! → [`adapter::adamw_step`] → [`adapter::ensemble_weights`] →
//! [`dsp::istft`]. [`adapter::adapt_utterance`] wires these together;
//! [`bench::run_benchmark`] measures the effect on synthetic corpora.

pub mod adapter;
pub mod bench;
pub mod config;
pub mod dsp;
pub mod error;
pub mod grid;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod reference;
pub mod report;
pub mod synth;
pub mod wav;

pub use adapter::{adapt_utterance, AdaptConfig};
pub use dsp::{apply_mask, istft, stft, AudioClip, Spectrogram, StftConfig};
pub use error::{Error, Result};
pub use grid::{Grid, Mask};
pub use loss::{mpol_loss, shelf_penalty, wasserstein_1d};
pub use model::MaskNet;
pub use reference::{estimate_noise_floor, reference_mask};
