//! Triangular mel filterbank over the power spectrum.
//!
//! The mel scale is the common `2595 * log10(1 + f/700)` form. Filters span
//! 0 Hz to Nyquist with centers equally spaced in mel; each triangle is
//! area-normalized by `2 / (f_hi - f_lo)`.

use ndarray::Array2;

use crate::dsp::{ComplexSpectrogram, Spectrogram, SpectrogramKind, LOG_FLOOR};
use crate::error::{Error, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10.0f64.powf(mel / 2595.0) - 1.0)
}

/// Triangle vertex frequencies in Hz: `n_mels + 2` points equally spaced in
/// mel from 0 to Nyquist. Filter `m` rises over `[v[m], v[m+1]]` and falls
/// over `[v[m+1], v[m+2]]`.
pub fn mel_vertices(n_mels: usize, sample_rate: u32) -> Vec<f64> {
    let nyquist = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(nyquist);
    (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect()
}

/// Filterbank matrix, `n_mels` rows by `fft_size/2 + 1` columns.
pub fn mel_filterbank(n_mels: usize, fft_size: usize, sample_rate: u32) -> Result<Array2<f64>> {
    if n_mels == 0 {
        return Err(Error::InvalidParameter("n_mels must be >= 1".into()));
    }
    if sample_rate == 0 || fft_size == 0 {
        return Err(Error::InvalidParameter(
            "sample rate and fft size must be > 0".into(),
        ));
    }
    let bins = fft_size / 2 + 1;
    let vertices = mel_vertices(n_mels, sample_rate);
    let mut bank = Array2::<f64>::zeros((n_mels, bins));
    for m in 0..n_mels {
        let (lo, center, hi) = (vertices[m], vertices[m + 1], vertices[m + 2]);
        let norm = 2.0 / (hi - lo);
        for k in 0..bins {
            let freq = k as f64 * sample_rate as f64 / fft_size as f64;
            let weight = if freq > lo && freq < center {
                (freq - lo) / (center - lo)
            } else if freq == center {
                1.0
            } else if freq > center && freq < hi {
                (hi - freq) / (hi - center)
            } else {
                0.0
            };
            bank[(m, k)] = weight * norm;
        }
    }
    Ok(bank)
}

/// Log-mel features: the filterbank applied to the power spectrum, then
/// `ln(. + 1e-10)`. Output has `n_mels` columns.
pub fn log_mel(spectrogram: &ComplexSpectrogram, n_mels: usize) -> Result<Spectrogram> {
    let bank = mel_filterbank(n_mels, spectrogram.stft.fft_size, spectrogram.sample_rate)?;
    let (frames, bins) = spectrogram.values.dim();
    let mut values = Array2::<f64>::zeros((frames, n_mels));
    for t in 0..frames {
        for m in 0..n_mels {
            let mut acc = 0.0;
            for k in 0..bins {
                acc += bank[(m, k)] * spectrogram.values[(t, k)].norm_sqr();
            }
            values[(t, m)] = (acc + LOG_FLOOR).ln();
        }
    }
    Ok(Spectrogram {
        values,
        kind: SpectrogramKind::LogMel,
        stft: spectrogram.stft,
        sample_rate: spectrogram.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::StftParams;
    use rustfft::num_complex::Complex;

    #[test]
    fn mel_scale_round_trips() {
        for hz in [0.0, 100.0, 440.0, 1000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
    }

    #[test]
    fn filterbank_has_requested_shape() {
        let bank = mel_filterbank(80, 512, 16_000).unwrap();
        assert_eq!(bank.dim(), (80, 257));
    }

    #[test]
    fn filter_rows_are_positive() {
        let bank = mel_filterbank(80, 512, 16_000).unwrap();
        for (m, row) in bank.rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            assert!(sum > 0.0, "filter {m} sums to {sum}");
        }
    }

    #[test]
    fn adjacent_triangles_partition_the_axis() {
        // Between consecutive centers, the falling limb of one unnormalized
        // triangle and the rising limb of the next sum to exactly 1.
        let n_mels = 40;
        let vertices = mel_vertices(n_mels, 16_000);
        for m in 0..n_mels - 1 {
            let left_center = vertices[m + 1];
            let right_center = vertices[m + 2];
            for step in 1..10 {
                let f = left_center + (right_center - left_center) * step as f64 / 10.0;
                let falling = (vertices[m + 2] - f) / (vertices[m + 2] - vertices[m + 1]);
                let rising = (f - vertices[m + 1]) / (vertices[m + 2] - vertices[m + 1]);
                assert!((falling + rising - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn impulse_spectrum_reads_out_filter_column() {
        let params = StftParams::new(400, 160, 512).unwrap();
        let n_mels = 80;
        let bank = mel_filterbank(n_mels, params.fft_size, 16_000).unwrap();
        // Two frames, each exciting a single bin with unit magnitude.
        for &bin in &[14usize, 100, 200] {
            let mut values =
                ndarray::Array2::<Complex<f64>>::zeros((1, params.bins()));
            values[(0, bin)] = Complex::new(1.0, 0.0);
            let spec = ComplexSpectrogram {
                values,
                stft: params,
                sample_rate: 16_000,
            };
            let mel = log_mel(&spec, n_mels).unwrap();
            for m in 0..n_mels {
                let expected = (bank[(m, bin)] + LOG_FLOOR).ln();
                assert!(
                    (mel.values[(0, m)] - expected).abs() < 1e-12,
                    "bin {bin} filter {m}"
                );
            }
        }
    }

    #[test]
    fn log_mel_has_n_mels_columns() {
        let params = StftParams::default_speech();
        let wave = crate::dsp::Waveform::new(vec![0.1; 4000], 16_000).unwrap();
        let complex = crate::dsp::stft(&wave, &params).unwrap();
        let mel = log_mel(&complex, 80).unwrap();
        assert_eq!(mel.values.ncols(), 80);
        assert_eq!(mel.kind, SpectrogramKind::LogMel);
    }

    #[test]
    fn zero_mels_is_rejected() {
        assert!(mel_filterbank(0, 512, 16_000).is_err());
    }
}
