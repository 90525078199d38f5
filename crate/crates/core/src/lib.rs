//! Fuzzy valence-arousal-dominance emotion representation and the
//! CNN-LSTM-fuzzy fusion classifiers built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! * [`fuzzy`] - interval type-2 membership functions over the 1-9 VAD scale.
//! * [`clustering`] - fuzzy C-means and the fuzzy silhouette index.
//! * [`lattice`] - the 27-cuboid low/medium/high partition of VAD space.
//! * [`dsp`] - EEG conditioning, segmentation and STFT spectrograms.
//! * [`nn`] - a small reverse-mode network toolkit (conv, pool, LSTM, dense).
//! * [`models`] - the fusion model variants, training and experiments.
//! * [`data`] - dataset manifests, splits and the synthetic generator.

pub mod clustering;
pub mod data;
pub mod dsp;
pub mod error;
pub mod fuzzy;
pub mod lattice;
pub mod models;
pub mod nn;

pub use error::{Error, ErrorKind, Result};
pub use fuzzy::{Dimension, Family, MembershipParams, Term, Type2FuzzyVector, VadRating};
