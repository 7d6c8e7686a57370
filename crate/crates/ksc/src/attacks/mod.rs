//! Security evaluation: phase reconstruction from encrypted magnitude
//! spectrograms, reconstruction quality metrics, and ciphertext-only key
//! recovery.

mod keysearch;
mod phase;

pub use keysearch::{key_recovery_attack, smoothness, AttackConfig, AttackReport};
pub use phase::{
    griffin_lim, pghi, phase_reconstruct, GriffinLimOutcome, PhaseReconConfig, PhaseReconMethod,
    HANN_GAUSSIAN_RATIO,
};

use crate::dsp::{magnitude, stft, StftParams, Waveform};
use crate::error::{Error, Result};
use crate::metrics::{log_spectral_distance, snr_db};

#[derive(Debug, Clone, Copy)]
pub struct ReconMetrics {
    pub lsd_db: f64,
    pub snr_db: Option<f64>,
}

/// Compare a reconstruction against the original waveform. Lengths are
/// aligned by truncating to the shorter signal; the log-spectral distance is
/// computed over magnitude spectrograms analyzed with `params`.
pub fn evaluate_reconstruction(
    original: &Waveform,
    reconstructed: &Waveform,
    params: &StftParams,
) -> Result<ReconMetrics> {
    if original.sample_rate != reconstructed.sample_rate {
        return Err(Error::DimensionMismatch(format!(
            "sample rates differ: {} vs {}",
            original.sample_rate, reconstructed.sample_rate
        )));
    }
    let len = original.len().min(reconstructed.len());
    if len < params.window_length {
        return Err(Error::InvalidParameter(format!(
            "overlapping span of {len} samples is shorter than the analysis window"
        )));
    }
    let a = Waveform::new(original.samples[..len].to_vec(), original.sample_rate)?;
    let b = Waveform::new(
        reconstructed.samples[..len].to_vec(),
        reconstructed.sample_rate,
    )?;
    let mag_a = magnitude(&stft(&a, params)?);
    let mag_b = magnitude(&stft(&b, params)?);
    let lsd = log_spectral_distance(&mag_a.values, &mag_b.values)?;
    let snr = match snr_db(&a.samples, &b.samples) {
        Ok(v) => Some(v),
        Err(Error::UndefinedReference(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ReconMetrics {
        lsd_db: lsd,
        snr_db: snr,
    })
}
