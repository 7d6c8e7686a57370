//! Secret-key encryption toolkit for speech data.
//!
//! Spectrograms and waveforms are divided into fixed-size blocks and
//! encrypted block-wise, either by shuffling value positions with a
//! permutation key or by flipping value signs with a bit key. A
//! patch-embedding layer whose kernel size equals its stride can be
//! transformed with the same key so that encrypted inputs produce exactly
//! the embeddings the plain inputs would have produced; anyone without the
//! key gets strongly distorted data and useless embeddings. An attack
//! harness (phase reconstruction and ciphertext-only key search) probes how
//! much an eavesdropper can recover.

pub mod attacks;
pub mod blocking;
pub mod cipher;
pub mod cli;
pub mod dsp;
pub mod error;
pub mod keys;
pub mod metrics;
pub mod patch_embed;
pub mod rng;
pub mod synth;

pub use blocking::{BlockGrid, BlockSpec, RemainderPolicy, Signal};
pub use cipher::EncryptedSignal;
pub use error::{Error, Result};
pub use keys::{CipherKind, FlipKey, Key, KeySeed, Mode, ShuffleKey};
pub use patch_embed::{Embedding, PatchEmbedKernel, VerifyReport};
