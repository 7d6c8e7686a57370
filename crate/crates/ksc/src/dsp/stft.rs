//! Short-time Fourier analysis with a periodic Hann window.
//!
//! Frames start at multiples of the hop with no centering padding; frame `t`
//! covers samples `t*hop .. t*hop + window_length`. Inversion uses weighted
//! overlap-add (the synthesis window equals the analysis window, normalized
//! by the summed squared window), which reconstructs the interior of the
//! signal exactly up to FFT rounding for any hop at most half the window.

use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::dsp::{ComplexSpectrogram, Spectrogram, SpectrogramKind, StftParams, Waveform, LOG_FLOOR};
use crate::error::{Error, Result};

/// Periodic Hann window: `0.5 * (1 - cos(2*pi*n / len))`.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()))
        .collect()
}

fn forward_plan(fft_size: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(fft_size)
}

fn inverse_plan(fft_size: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(fft_size)
}

pub fn stft(waveform: &Waveform, params: &StftParams) -> Result<ComplexSpectrogram> {
    let n = waveform.samples.len();
    let w = params.window_length;
    if n < w {
        return Err(Error::InvalidParameter(format!(
            "signal of {n} samples is shorter than the {w}-sample analysis window"
        )));
    }
    let frames = (n - w) / params.hop + 1;
    let bins = params.bins();
    let window = hann_window(w);
    let plan = forward_plan(params.fft_size);
    let mut values = Array2::<Complex<f64>>::zeros((frames, bins));
    let mut buffer = vec![Complex::new(0.0, 0.0); params.fft_size];
    for t in 0..frames {
        let start = t * params.hop;
        for (s, b) in buffer.iter_mut().enumerate() {
            *b = if s < w {
                Complex::new(waveform.samples[start + s] * window[s], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        plan.process(&mut buffer);
        for k in 0..bins {
            values[(t, k)] = buffer[k];
        }
    }
    Ok(ComplexSpectrogram {
        values,
        stft: *params,
        sample_rate: waveform.sample_rate,
    })
}

/// Weighted overlap-add inversion. Output covers `(frames-1)*hop + window`
/// samples; positions with negligible window coverage are zero.
pub fn istft(spectrogram: &ComplexSpectrogram) -> Result<Waveform> {
    let params = &spectrogram.stft;
    let (frames, bins) = spectrogram.values.dim();
    if bins != params.bins() {
        return Err(Error::DimensionMismatch(format!(
            "spectrogram holds {bins} bins but fft size {} implies {}",
            params.fft_size,
            params.bins()
        )));
    }
    if frames == 0 {
        return Err(Error::DimensionMismatch("empty spectrogram".into()));
    }
    let w = params.window_length;
    let fft_size = params.fft_size;
    let window = hann_window(w);
    let out_len = (frames - 1) * params.hop + w;
    let mut numerator = vec![0.0f64; out_len];
    let mut denominator = vec![0.0f64; out_len];
    let plan = inverse_plan(fft_size);
    let mut buffer = vec![Complex::new(0.0, 0.0); fft_size];
    for t in 0..frames {
        // Rebuild the full spectrum from the one-sided half.
        for k in 0..bins {
            buffer[k] = spectrogram.values[(t, k)];
        }
        for k in bins..fft_size {
            buffer[k] = spectrogram.values[(t, fft_size - k)].conj();
        }
        plan.process(&mut buffer);
        let start = t * params.hop;
        for s in 0..w {
            let frame_sample = buffer[s].re / fft_size as f64;
            numerator[start + s] += frame_sample * window[s];
            denominator[start + s] += window[s] * window[s];
        }
    }
    let den_max = denominator.iter().cloned().fold(0.0, f64::max);
    let floor = den_max * 1e-12;
    let samples = numerator
        .iter()
        .zip(denominator.iter())
        .map(|(&num, &den)| if den > floor { num / den } else { 0.0 })
        .collect();
    Waveform::new(samples, spectrogram.sample_rate)
}

pub fn magnitude(spectrogram: &ComplexSpectrogram) -> Spectrogram {
    Spectrogram {
        values: spectrogram.values.mapv(|c| c.norm()),
        kind: SpectrogramKind::LinearMagnitude,
        stft: spectrogram.stft,
        sample_rate: spectrogram.sample_rate,
    }
}

/// Natural log of the magnitude with a `1e-10` floor.
pub fn log_magnitude(spectrogram: &ComplexSpectrogram) -> Spectrogram {
    Spectrogram {
        values: spectrogram.values.mapv(|c| (c.norm() + LOG_FLOOR).ln()),
        kind: SpectrogramKind::LogMagnitude,
        stft: spectrogram.stft,
        sample_rate: spectrogram.sample_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, sample_rate: u32, n: usize) -> Waveform {
        let samples = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sample_rate as f64).sin())
            .collect();
        Waveform::new(samples, sample_rate).unwrap()
    }

    #[test]
    fn zero_signal_gives_zero_spectrogram() {
        let wave = Waveform::new(vec![0.0; 2000], 16_000).unwrap();
        let spec = stft(&wave, &StftParams::default_speech()).unwrap();
        assert!(spec.values.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn sine_peaks_at_analytic_bin() {
        // 440 Hz at 16 kHz with a 512-point FFT peaks at round(440*512/16000) = 14.
        let wave = sine(440.0, 16_000, 8000);
        let spec = stft(&wave, &StftParams::default_speech()).unwrap();
        let mag = magnitude(&spec);
        let bins = mag.values.ncols();
        let mut avg = vec![0.0; bins];
        for row in mag.values.rows() {
            for (k, v) in row.iter().enumerate() {
                avg[k] += v;
            }
        }
        let peak = avg
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap();
        assert_eq!(peak, (440.0 * 512.0 / 16000.0_f64).round() as usize);
    }

    #[test]
    fn istft_inverts_stft_in_the_interior() {
        let params = StftParams::default_speech();
        let mut rng = crate::rng::SplitMix64::new(77);
        let samples: Vec<f64> = (0..6400).map(|_| rng.next_symmetric()).collect();
        let wave = Waveform::new(samples, 16_000).unwrap();
        let spec = stft(&wave, &params).unwrap();
        let back = istft(&spec).unwrap();
        assert!(back.len() <= wave.len());
        let w = params.window_length;
        for i in w..back.len() - w {
            let rel = (back.samples[i] - wave.samples[i]).abs()
                / wave.samples[i].abs().max(1e-3);
            assert!(rel <= 1e-10, "sample {i}: {} vs {}", back.samples[i], wave.samples[i]);
        }
    }

    #[test]
    fn istft_handles_quarter_window_hop() {
        let params = StftParams::new(256, 64, 256).unwrap();
        let wave = sine(523.0, 8_000, 4000);
        let spec = stft(&wave, &params).unwrap();
        let back = istft(&spec).unwrap();
        for i in 256..back.len() - 256 {
            assert!((back.samples[i] - wave.samples[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn parseval_energy_matches() {
        let params = StftParams::default_speech();
        let mut rng = crate::rng::SplitMix64::new(13);
        let samples: Vec<f64> = (0..4000).map(|_| rng.next_symmetric()).collect();
        let wave = Waveform::new(samples.clone(), 16_000).unwrap();
        let spec = stft(&wave, &params).unwrap();

        // Time-domain energy of every windowed frame.
        let window = hann_window(params.window_length);
        let frames = spec.values.nrows();
        let mut time_energy = 0.0;
        for t in 0..frames {
            for (s, &w) in window.iter().enumerate() {
                let x = w * samples[t * params.hop + s];
                time_energy += x * x;
            }
        }

        // Frequency-domain energy from the one-sided spectrum.
        let nfft = params.fft_size as f64;
        let mut freq_energy = 0.0;
        for t in 0..frames {
            for k in 0..params.bins() {
                let e = spec.values[(t, k)].norm_sqr();
                let weight = if k == 0 || k == params.fft_size / 2 { 1.0 } else { 2.0 };
                freq_energy += weight * e;
            }
        }
        freq_energy /= nfft;

        let rel = (time_energy - freq_energy).abs() / time_energy;
        assert!(rel <= 1e-8, "Parseval drift {rel}");
    }

    #[test]
    fn too_short_signal_is_rejected() {
        let wave = Waveform::new(vec![0.0; 100], 16_000).unwrap();
        assert!(stft(&wave, &StftParams::default_speech()).is_err());
    }

    #[test]
    fn log_magnitude_floors_at_log_epsilon() {
        let wave = Waveform::new(vec![0.0; 1000], 16_000).unwrap();
        let spec = stft(&wave, &StftParams::default_speech()).unwrap();
        let logmag = log_magnitude(&spec);
        let expected = LOG_FLOOR.ln();
        assert!(logmag.values.iter().all(|&v| v == expected));
    }
}
