//! A minimal first convolutional layer with kernel size equal to stride, the
//! two kernel transforms that make it accept encrypted inputs, and the
//! scenario verifier.
//!
//! The kernel transforms are defined by one contract: embedding an encrypted
//! signal with the transformed kernel must equal embedding the plain signal
//! with the original kernel. For shuffling this means the kernel weights are
//! reordered with the same index rule as the data (`E'[l] = E[k[l]]` on the
//! flat spatial index, per output channel); products are then identical and
//! only the summation order changes, so the match is within 1e-12 relative.
//! For flipping both factors of each product are negated together, which is
//! exact in IEEE arithmetic, so the match is bit-exact.
//!
//! Flat spatial index convention, shared with [`crate::blocking`]:
//! `l = i * P + j` for kernel entry `(i, j)` (time axis first).

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array3;

use crate::blocking::{BlockSpec, RemainderPolicy, Signal};
use crate::cipher::encrypt;
use crate::error::{Error, Result};
use crate::keys::{CipherKind, FlipKey, Key, Mode, ShuffleKey};
use crate::metrics::{frobenius_rel_diff, max_norm_rel_diff};
use crate::rng::SplitMix64;

/// First-layer convolution kernel, `P x P x d` in 2-D mode or `P x d` in
/// 1-D mode. Weights are stored flat in `(i, j, c)` order, i.e. spatial
/// index major, output channel minor.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchEmbedKernel {
    mode: Mode,
    patch: usize,
    dim: usize,
    weights: Vec<f64>,
}

impl PatchEmbedKernel {
    pub fn new(mode: Mode, patch: usize, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if patch == 0 || dim == 0 {
            return Err(Error::InvalidParameter(
                "patch size and output dimension must be >= 1".into(),
            ));
        }
        let expected = crate::keys::key_len(mode, patch) * dim;
        if weights.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "kernel weights have length {}, expected {expected} for mode {mode} P={patch} d={dim}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("kernel weights must be finite".into()));
        }
        Ok(PatchEmbedKernel {
            mode,
            patch,
            dim,
            weights,
        })
    }

    /// Deterministic kernel with weights uniform on `[-1, 1)`.
    pub fn seeded(seed: u64, mode: Mode, patch: usize, dim: usize) -> Result<Self> {
        if patch == 0 || dim == 0 {
            return Err(Error::InvalidParameter(
                "patch size and output dimension must be >= 1".into(),
            ));
        }
        let mut rng = SplitMix64::new(seed);
        let len = crate::keys::key_len(mode, patch) * dim;
        let weights = (0..len).map(|_| rng.next_symmetric()).collect();
        PatchEmbedKernel::new(mode, patch, dim, weights)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn patch_size(&self) -> usize {
        self.patch
    }

    pub fn output_dim(&self) -> usize {
        self.dim
    }

    /// Number of spatial positions: P^2 in 2-D, P in 1-D.
    pub fn spatial_len(&self) -> usize {
        crate::keys::key_len(self.mode, self.patch)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at flat spatial position `l`, output channel `c`.
    pub fn weight(&self, l: usize, c: usize) -> f64 {
        self.weights[l * self.dim + c]
    }

    pub fn is_all_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

/// Output of the patch-embedding layer. 2-D inputs give shape
/// `(T/P, F/P, d)`; 1-D inputs give `(N/P, 1, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Array3<f64>,
    pub mode: Mode,
}

fn check_kernel_key(kernel: &PatchEmbedKernel, mode: Mode, block_size: usize) -> Result<()> {
    if kernel.mode() != mode || kernel.patch_size() != block_size {
        return Err(Error::KeyMismatch(format!(
            "key is {} M={}, kernel is {} P={}",
            mode,
            block_size,
            kernel.mode(),
            kernel.patch_size()
        )));
    }
    Ok(())
}

/// Non-overlapping strided convolution without bias. Accumulation walks the
/// flat spatial index in ascending order. Trailing rows/columns/samples that
/// do not fill a patch are ignored, as a strided convolution never reads
/// them.
pub fn embed(signal: &Signal, kernel: &PatchEmbedKernel) -> Result<Embedding> {
    if signal.mode() != kernel.mode() {
        return Err(Error::DimensionMismatch(format!(
            "kernel is {} but signal is {} ({})",
            kernel.mode(),
            signal.mode(),
            signal.dims_label()
        )));
    }
    let p = kernel.patch_size();
    let d = kernel.output_dim();
    match signal {
        Signal::OneD(samples) => {
            let patches = samples.len() / p;
            let mut values = Array3::<f64>::zeros((patches, 1, d));
            for u in 0..patches {
                let patch = &samples[u * p..(u + 1) * p];
                for c in 0..d {
                    let mut acc = 0.0;
                    for (l, &x) in patch.iter().enumerate() {
                        acc += kernel.weight(l, c) * x;
                    }
                    values[(u, 0, c)] = acc;
                }
            }
            Ok(Embedding {
                values,
                mode: Mode::OneD,
            })
        }
        Signal::TwoD(matrix) => {
            let (t, f) = matrix.dim();
            let rows = t / p;
            let cols = f / p;
            let mut values = Array3::<f64>::zeros((rows, cols, d));
            for u in 0..rows {
                for v in 0..cols {
                    for c in 0..d {
                        let mut acc = 0.0;
                        for l in 0..p * p {
                            let (i, j) = (l / p, l % p);
                            acc += kernel.weight(l, c) * matrix[(u * p + i, v * p + j)];
                        }
                        values[(u, v, c)] = acc;
                    }
                }
            }
            Ok(Embedding {
                values,
                mode: Mode::TwoD,
            })
        }
    }
}

/// Like [`embed`] but requires the signal dimensions to be divisible by the
/// patch size.
pub fn embed_strict(signal: &Signal, kernel: &PatchEmbedKernel) -> Result<Embedding> {
    let p = kernel.patch_size();
    let divisible = match signal {
        Signal::OneD(samples) => samples.len() % p == 0,
        Signal::TwoD(matrix) => matrix.nrows() % p == 0 && matrix.ncols() % p == 0,
    };
    if !divisible {
        return Err(Error::DimensionMismatch(format!(
            "signal ({}) not divisible by patch size {p}",
            signal.dims_label()
        )));
    }
    embed(signal, kernel)
}

/// Kernel counterpart of shuffling: reorder the weights with the same index
/// rule the cipher applies to the data, for every output channel.
pub fn transform_kernel_shuffle(
    kernel: &PatchEmbedKernel,
    key: &ShuffleKey,
) -> Result<PatchEmbedKernel> {
    check_kernel_key(kernel, key.mode(), key.block_size())?;
    let d = kernel.output_dim();
    let mut weights = vec![0.0; kernel.weights().len()];
    for (l, &k) in key.indices().iter().enumerate() {
        let src = (k as usize - 1) * d;
        weights[l * d..(l + 1) * d].copy_from_slice(&kernel.weights()[src..src + d]);
    }
    PatchEmbedKernel::new(kernel.mode(), kernel.patch_size(), d, weights)
}

/// Kernel counterpart of flipping: negate the weights wherever the key bit
/// is 1, for every output channel.
pub fn transform_kernel_flip(kernel: &PatchEmbedKernel, key: &FlipKey) -> Result<PatchEmbedKernel> {
    check_kernel_key(kernel, key.mode(), key.block_size())?;
    let d = kernel.output_dim();
    let mut weights = kernel.weights().to_vec();
    for (l, &bit) in key.bits().iter().enumerate() {
        if bit == 1 {
            for w in &mut weights[l * d..(l + 1) * d] {
                *w = -*w;
            }
        }
    }
    PatchEmbedKernel::new(kernel.mode(), kernel.patch_size(), d, weights)
}

pub fn transform_kernel(kernel: &PatchEmbedKernel, key: &Key) -> Result<PatchEmbedKernel> {
    match key {
        Key::Shuffle(k) => transform_kernel_shuffle(kernel, k),
        Key::Flip(k) => transform_kernel_flip(kernel, k),
    }
}

/// Embedding-level comparison of the three usage scenarios.
///
/// `max_rel_diff_correct` is the max-norm relative distance between the
/// correct-key encrypted path and the plain reference; the two `mean_*`
/// fields are Frobenius (RMS) relative distances for the incorrect-key and
/// plain-query scenarios.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub max_rel_diff_correct: f64,
    pub mean_rel_diff_incorrect: f64,
    pub mean_rel_diff_plain: f64,
    pub cipher: CipherKind,
    pub mode: Mode,
    pub patch_size: usize,
    pub output_dim: usize,
    /// Set when the kernel is all zeros, making every distance trivially 0.
    pub degenerate_kernel: bool,
}

impl VerifyReport {
    pub fn to_text(&self) -> String {
        format!(
            "cipher={}\nmode={}\nP={}\nd={}\nmax_rel_diff_correct={:e}\nmean_rel_diff_incorrect={:e}\nmean_rel_diff_plain={:e}\ndegenerate_kernel={}\n",
            self.cipher,
            self.mode,
            self.patch_size,
            self.output_dim,
            self.max_rel_diff_correct,
            self.mean_rel_diff_incorrect,
            self.mean_rel_diff_plain,
            self.degenerate_kernel
        )
    }
}

pub fn verify_scenarios(
    signal: &Signal,
    kernel: &PatchEmbedKernel,
    key_correct: &Key,
    key_incorrect: &Key,
) -> Result<VerifyReport> {
    if key_correct.cipher() != key_incorrect.cipher() {
        return Err(Error::KeyMismatch(
            "correct and incorrect keys must use the same cipher".into(),
        ));
    }
    if key_correct == key_incorrect {
        return Err(Error::InvalidParameter(
            "incorrect key must differ from the correct key".into(),
        ));
    }
    check_kernel_key(kernel, key_correct.mode(), key_correct.block_size())?;
    check_kernel_key(kernel, key_incorrect.mode(), key_incorrect.block_size())?;

    let spec = BlockSpec::new(kernel.mode(), kernel.patch_size(), RemainderPolicy::Passthrough)?;
    let reference = embed(signal, kernel)?;
    let transformed = transform_kernel(kernel, key_correct)?;

    let enc_correct = encrypt(signal, key_correct, &spec)?;
    let emb_correct = embed(&enc_correct.data, &transformed)?;
    let enc_incorrect = encrypt(signal, key_incorrect, &spec)?;
    let emb_incorrect = embed(&enc_incorrect.data, &transformed)?;
    let emb_plain = embed(signal, &transformed)?;

    Ok(VerifyReport {
        max_rel_diff_correct: max_norm_rel_diff(&emb_correct.values, &reference.values)?,
        mean_rel_diff_incorrect: frobenius_rel_diff(&emb_incorrect.values, &reference.values)?,
        mean_rel_diff_plain: frobenius_rel_diff(&emb_plain.values, &reference.values)?,
        cipher: key_correct.cipher(),
        mode: kernel.mode(),
        patch_size: kernel.patch_size(),
        output_dim: kernel.output_dim(),
        degenerate_kernel: kernel.is_all_zero(),
    })
}

// --- kernel file format ---
//
// Binary: magic "KRN1", little-endian u32 P, u32 d, one mode byte (1 = 1-D,
// 2 = 2-D), then P*P*d (or P*d) little-endian f64 weights in (i, j, c) order.

const KERNEL_MAGIC: &[u8; 4] = b"KRN1";

pub fn write_kernel_file(path: &Path, kernel: &PatchEmbedKernel) -> Result<()> {
    let mut out = Vec::with_capacity(13 + kernel.weights().len() * 8);
    out.extend_from_slice(KERNEL_MAGIC);
    out.extend_from_slice(&(kernel.patch_size() as u32).to_le_bytes());
    out.extend_from_slice(&(kernel.output_dim() as u32).to_le_bytes());
    out.push(match kernel.mode() {
        Mode::OneD => 1,
        Mode::TwoD => 2,
    });
    for w in kernel.weights() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub fn read_kernel_file(path: &Path) -> Result<PatchEmbedKernel> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 13 || &bytes[..4] != KERNEL_MAGIC {
        return Err(Error::Format("not a KRN1 kernel file".into()));
    }
    let patch = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let mode = match bytes[12] {
        1 => Mode::OneD,
        2 => Mode::TwoD,
        other => return Err(Error::Format(format!("bad kernel mode byte {other}"))),
    };
    let expected = crate::keys::key_len(mode, patch) * dim;
    let payload = &bytes[13..];
    if payload.len() != expected * 8 {
        return Err(Error::Format(format!(
            "kernel payload holds {} bytes, expected {}",
            payload.len(),
            expected * 8
        )));
    }
    let weights = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PatchEmbedKernel::new(mode, patch, dim, weights)
}

// --- embedding file format ---
//
// Binary: magic "EMB1", one mode byte, little-endian u32 patch-rows,
// patch-cols, d, then the values as little-endian f64 in (u, v, c) order.

const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";

pub fn write_embedding_file(path: &Path, embedding: &Embedding) -> Result<()> {
    let (u, v, d) = embedding.values.dim();
    let mut out = Vec::with_capacity(17 + u * v * d * 8);
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.push(match embedding.mode {
        Mode::OneD => 1,
        Mode::TwoD => 2,
    });
    out.extend_from_slice(&(u as u32).to_le_bytes());
    out.extend_from_slice(&(v as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for w in embedding.values.iter() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub fn read_embedding_file(path: &Path) -> Result<Embedding> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 17 || &bytes[..4] != EMBEDDING_MAGIC {
        return Err(Error::Format("not an EMB1 embedding file".into()));
    }
    let mode = match bytes[4] {
        1 => Mode::OneD,
        2 => Mode::TwoD,
        other => return Err(Error::Format(format!("bad embedding mode byte {other}"))),
    };
    let u = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let v = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[13..17].try_into().unwrap()) as usize;
    let payload = &bytes[17..];
    if payload.len() != u * v * d * 8 {
        return Err(Error::Format(format!(
            "embedding payload holds {} bytes, expected {}",
            payload.len(),
            u * v * d * 8
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let values = Array3::from_shape_vec((u, v, d), values)
        .map_err(|e| Error::Format(format!("bad embedding shape: {e}")))?;
    Ok(Embedding { values, mode })
}
