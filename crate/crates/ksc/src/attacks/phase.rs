//! Waveform recovery from magnitude-only spectrograms.
//!
//! Two methods: classic Griffin-Lim alternating projections (zero-phase
//! initialization, no momentum, so the residual is monotonically
//! non-increasing), and noniterative phase-gradient heuristic integration
//! (PGHI), which estimates the phase gradient from the log-magnitude via the
//! Gaussian-window phase-magnitude relations and integrates it outward from
//! magnitude peaks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::Array2;
use rustfft::num_complex::Complex;

use crate::dsp::{istft, stft, ComplexSpectrogram, Spectrogram, SpectrogramKind, Waveform};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Effective Gaussian time-frequency ratio of a Hann window of length `W`
/// is `0.25645 * W^2` (least-squares Gaussian fit).
pub const HANN_GAUSSIAN_RATIO: f64 = 0.25645;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseReconMethod {
    GriffinLim,
    Pghi,
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseReconConfig {
    pub method: PhaseReconMethod,
    /// Griffin-Lim projection count.
    pub iterations: usize,
    /// PGHI: bins below this fraction of the peak magnitude get random phase.
    pub relative_threshold: f64,
    /// Seed for any randomized fill.
    pub seed: u64,
}

impl Default for PhaseReconConfig {
    fn default() -> Self {
        PhaseReconConfig {
            method: PhaseReconMethod::GriffinLim,
            iterations: 100,
            relative_threshold: 1e-7,
            seed: 0,
        }
    }
}

impl PhaseReconConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if !(self.relative_threshold > 0.0 && self.relative_threshold < 1.0) {
            return Err(Error::InvalidParameter(
                "relative threshold must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

fn check_magnitude_input(spectrogram: &Spectrogram) -> Result<()> {
    if spectrogram.kind != SpectrogramKind::LinearMagnitude {
        return Err(Error::InvalidParameter(
            "phase reconstruction needs a linear-magnitude spectrogram".into(),
        ));
    }
    Ok(())
}

pub fn phase_reconstruct(spectrogram: &Spectrogram, config: &PhaseReconConfig) -> Result<Waveform> {
    config.validate()?;
    check_magnitude_input(spectrogram)?;
    match config.method {
        PhaseReconMethod::GriffinLim => {
            Ok(griffin_lim(spectrogram, config.iterations)?.waveform)
        }
        PhaseReconMethod::Pghi => pghi(spectrogram, config.relative_threshold, config.seed),
    }
}

#[derive(Debug, Clone)]
pub struct GriffinLimOutcome {
    pub waveform: Waveform,
    /// Residual `|| |STFT(x_i)| - |S| ||_F / || S ||_F` per iteration.
    pub spectral_convergence: Vec<f64>,
}

/// Alternating projections between the set of consistent STFTs and the set
/// of arrays with the target magnitude. Entries of the target may be
/// negative (encrypted spectrograms); they act as signed amplitudes whose
/// magnitude constraint is their absolute value.
pub fn griffin_lim(spectrogram: &Spectrogram, iterations: usize) -> Result<GriffinLimOutcome> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    check_magnitude_input(spectrogram)?;
    let target = &spectrogram.values;
    let target_norm: f64 = target.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut estimate = target.mapv(|v| Complex::new(v, 0.0));
    let mut history = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let wave = istft(&ComplexSpectrogram {
            values: estimate,
            stft: spectrogram.stft,
            sample_rate: spectrogram.sample_rate,
        })?;
        let reanalyzed = stft(&wave, &spectrogram.stft)?;
        debug_assert_eq!(reanalyzed.values.dim(), target.dim());

        let mut err = 0.0;
        for (c, &v) in reanalyzed.values.iter().zip(target.iter()) {
            let d = c.norm() - v.abs();
            err += d * d;
        }
        history.push(if target_norm > 0.0 {
            err.sqrt() / target_norm
        } else {
            0.0
        });

        estimate = ndarray::Zip::from(&reanalyzed.values)
            .and(target)
            .map_collect(|c, &v| {
                let norm = c.norm();
                if norm > 0.0 {
                    c / norm * v
                } else {
                    Complex::new(v, 0.0)
                }
            });
    }
    let waveform = istft(&ComplexSpectrogram {
        values: estimate,
        stft: spectrogram.stft,
        sample_rate: spectrogram.sample_rate,
    })?;
    Ok(GriffinLimOutcome {
        waveform,
        spectral_convergence: history,
    })
}

/// Max-heap entry ordered by magnitude with deterministic index tie-breaks.
struct HeapBin {
    magnitude: f64,
    frame: usize,
    bin: usize,
}

impl PartialEq for HeapBin {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapBin {}
impl PartialOrd for HeapBin {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapBin {
    fn cmp(&self, other: &Self) -> Ordering {
        self.magnitude
            .total_cmp(&other.magnitude)
            .then_with(|| other.frame.cmp(&self.frame))
            .then_with(|| other.bin.cmp(&self.bin))
    }
}

/// Phase-gradient heuristic integration.
///
/// The phase gradient is estimated from centered differences of the
/// log-magnitude through the Gaussian-window relations (with the Hann
/// window's effective `gamma`), then integrated by trapezoid steps over a
/// magnitude-ordered heap. Bins below `relative_threshold * max` get
/// seeded random phase.
pub fn pghi(spectrogram: &Spectrogram, relative_threshold: f64, seed: u64) -> Result<Waveform> {
    check_magnitude_input(spectrogram)?;
    if !(relative_threshold > 0.0 && relative_threshold < 1.0) {
        return Err(Error::InvalidParameter(
            "relative threshold must be in (0, 1)".into(),
        ));
    }
    let params = spectrogram.stft;
    let (frames, bins) = spectrogram.values.dim();
    if frames == 0 || bins == 0 {
        return Err(Error::DimensionMismatch("empty spectrogram".into()));
    }
    let magnitude = spectrogram.values.mapv(f64::abs);
    let peak = magnitude.iter().cloned().fold(0.0, f64::max);
    let hop = params.hop as f64;
    let fft = params.fft_size as f64;
    let gamma = HANN_GAUSSIAN_RATIO * (params.window_length as f64).powi(2);

    // Log magnitude with a floor far below the significance threshold.
    let floor = (peak * 1e-30).max(f64::MIN_POSITIVE);
    let logs = magnitude.mapv(|m| m.max(floor).ln());
    let diff_frames = |n: usize, k: usize| -> f64 {
        match n {
            0 => logs[(1.min(frames - 1), k)] - logs[(0, k)],
            n if n == frames - 1 => logs[(n, k)] - logs[(n - 1, k)],
            n => (logs[(n + 1, k)] - logs[(n - 1, k)]) / 2.0,
        }
    };
    let diff_bins = |n: usize, k: usize| -> f64 {
        match k {
            0 => logs[(n, 1.min(bins - 1))] - logs[(n, 0)],
            k if k == bins - 1 => logs[(n, k)] - logs[(n, k - 1)],
            k => (logs[(n, k + 1)] - logs[(n, k - 1)]) / 2.0,
        }
    };

    // Phase increments per frame step and per bin step. The linear terms
    // come from the frame-anchored analysis convention: bin k advances by
    // 2*pi*k*hop/fft per frame, and the window center sits at W/2.
    let window_center = params.window_length as f64 / 2.0;
    let tgrad = Array2::from_shape_fn((frames, bins), |(n, k)| {
        2.0 * std::f64::consts::PI * k as f64 * hop / fft
            + (hop * fft / gamma) * diff_bins(n, k)
    });
    let fgrad = Array2::from_shape_fn((frames, bins), |(n, k)| {
        -(gamma / (hop * fft)) * diff_frames(n, k)
            - 2.0 * std::f64::consts::PI * window_center / fft
    });

    let threshold = relative_threshold * peak;
    let mut phase = Array2::<f64>::zeros((frames, bins));
    let mut done = Array2::<bool>::from_elem((frames, bins), false);

    // Random phase for insignificant bins.
    let mut rng = SplitMix64::new(seed);
    for ((n, k), &m) in magnitude.indexed_iter() {
        if m <= threshold {
            phase[(n, k)] = 2.0 * std::f64::consts::PI * rng.next_f64();
            done[(n, k)] = true;
        }
    }

    // Significant bins ordered by magnitude seed the integration; each
    // connected region grows outward through its strongest frontier.
    let mut seeds: Vec<HeapBin> = magnitude
        .indexed_iter()
        .filter(|(_, &m)| m > threshold)
        .map(|((n, k), &m)| HeapBin {
            magnitude: m,
            frame: n,
            bin: k,
        })
        .collect();
    seeds.sort_by(|a, b| b.cmp(a));

    let mut heap = BinaryHeap::new();
    for seed_bin in seeds {
        let (n, k) = (seed_bin.frame, seed_bin.bin);
        if done[(n, k)] {
            continue;
        }
        phase[(n, k)] = 0.0;
        done[(n, k)] = true;
        heap.push(seed_bin);
        while let Some(HeapBin { frame, bin, .. }) = heap.pop() {
            let mut visit = |nf: usize, nb: usize, delta: f64| {
                if !done[(nf, nb)] {
                    phase[(nf, nb)] = phase[(frame, bin)] + delta;
                    done[(nf, nb)] = true;
                    heap.push(HeapBin {
                        magnitude: magnitude[(nf, nb)],
                        frame: nf,
                        bin: nb,
                    });
                }
            };
            if frame + 1 < frames {
                visit(frame + 1, bin, (tgrad[(frame, bin)] + tgrad[(frame + 1, bin)]) / 2.0);
            }
            if frame > 0 {
                visit(frame - 1, bin, -(tgrad[(frame, bin)] + tgrad[(frame - 1, bin)]) / 2.0);
            }
            if bin + 1 < bins {
                visit(frame, bin + 1, (fgrad[(frame, bin)] + fgrad[(frame, bin + 1)]) / 2.0);
            }
            if bin > 0 {
                visit(frame, bin - 1, -(fgrad[(frame, bin)] + fgrad[(frame, bin - 1)]) / 2.0);
            }
        }
    }

    let values = ndarray::Zip::from(&spectrogram.values)
        .and(&phase)
        .map_collect(|&v, &p| Complex::from_polar(1.0, p) * v);
    istft(&ComplexSpectrogram {
        values,
        stft: params,
        sample_rate: spectrogram.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{magnitude, StftParams};
    use crate::synth::speech_like;

    fn speech_magnitude(seed: u64) -> Spectrogram {
        let wave = speech_like(seed, 16_000, 0.6);
        let complex = stft(&wave, &StftParams::default_speech()).unwrap();
        magnitude(&complex)
    }

    fn spectral_convergence(target: &Spectrogram, wave: &Waveform) -> f64 {
        let re = stft(wave, &target.stft).unwrap();
        let frames = re.values.nrows().min(target.values.nrows());
        let mut err = 0.0;
        let mut norm = 0.0;
        for t in 0..frames {
            for k in 0..target.values.ncols() {
                let d = re.values[(t, k)].norm() - target.values[(t, k)].abs();
                err += d * d;
                norm += target.values[(t, k)] * target.values[(t, k)];
            }
        }
        (err / norm).sqrt()
    }

    #[test]
    fn griffin_lim_reaches_self_consistency() {
        let target = speech_magnitude(21);
        let outcome = griffin_lim(&target, 100).unwrap();
        let final_err = *outcome.spectral_convergence.last().unwrap();
        assert!(final_err < 0.1, "final spectral convergence {final_err}");
    }

    #[test]
    fn griffin_lim_error_is_non_increasing() {
        let target = speech_magnitude(22);
        let outcome = griffin_lim(&target, 60).unwrap();
        for pair in outcome.spectral_convergence.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "residual rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn zero_magnitude_gives_zero_waveform() {
        let target = Spectrogram {
            values: Array2::zeros((20, 257)),
            kind: SpectrogramKind::LinearMagnitude,
            stft: StftParams::default_speech(),
            sample_rate: 16_000,
        };
        let outcome = griffin_lim(&target, 5).unwrap();
        assert!(outcome.waveform.samples.iter().all(|&s| s == 0.0));
        let wave = pghi(&target, 1e-7, 3).unwrap();
        assert!(wave.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn griffin_lim_is_deterministic() {
        let target = speech_magnitude(23);
        let a = griffin_lim(&target, 10).unwrap();
        let b = griffin_lim(&target, 10).unwrap();
        assert_eq!(a.waveform, b.waveform);
    }

    #[test]
    fn pghi_is_deterministic_per_seed() {
        let target = speech_magnitude(24);
        let a = pghi(&target, 1e-6, 7).unwrap();
        let b = pghi(&target, 1e-6, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pghi_beats_zero_phase_baseline() {
        let target = speech_magnitude(25);
        let recon = pghi(&target, 1e-7, 0).unwrap();
        let err_pghi = spectral_convergence(&target, &recon);

        // Zero-phase baseline: one inverse transform of the bare magnitudes.
        let zero_phase = istft(&ComplexSpectrogram {
            values: target.values.mapv(|v| Complex::new(v, 0.0)),
            stft: target.stft,
            sample_rate: target.sample_rate,
        })
        .unwrap();
        let err_zero = spectral_convergence(&target, &zero_phase);
        assert!(
            err_pghi < err_zero,
            "pghi {err_pghi} should beat zero phase {err_zero}"
        );
    }

    #[test]
    fn phase_gradient_estimates_track_true_phase() {
        // On a real STFT the heuristic phase increments should be far more
        // accurate than chance on high-energy bins: the magnitude-weighted
        // mean wrapped error must stay well under pi/2.
        let wave = speech_like(26, 16_000, 0.6);
        let complex = stft(&wave, &StftParams::default_speech()).unwrap();
        let target = magnitude(&complex);
        let params = target.stft;
        let (frames, bins) = target.values.dim();
        let gamma = HANN_GAUSSIAN_RATIO * (params.window_length as f64).powi(2);
        let hop = params.hop as f64;
        let fft = params.fft_size as f64;
        let peak = target.values.iter().cloned().fold(0.0, f64::max);
        let logs = target.values.mapv(|m| m.max(peak * 1e-12).ln());

        let wrap = |x: f64| {
            let two_pi = 2.0 * std::f64::consts::PI;
            (x + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI
        };

        let mut weighted_err = 0.0;
        let mut weight = 0.0;
        for n in 0..frames - 1 {
            for k in 1..bins - 1 {
                let m = target.values[(n, k)].min(target.values[(n + 1, k)]);
                if m < 0.05 * peak {
                    continue;
                }
                let grad_here = 2.0 * std::f64::consts::PI * k as f64 * hop / fft
                    + (hop * fft / gamma) * (logs[(n, k + 1)] - logs[(n, k - 1)]) / 2.0;
                let grad_next = 2.0 * std::f64::consts::PI * k as f64 * hop / fft
                    + (hop * fft / gamma) * (logs[(n + 1, k + 1)] - logs[(n + 1, k - 1)]) / 2.0;
                let predicted = (grad_here + grad_next) / 2.0;
                let actual = complex.values[(n + 1, k)].arg() - complex.values[(n, k)].arg();
                weighted_err += wrap(actual - predicted).abs() * m;
                weight += m;
            }
        }
        let mean_err = weighted_err / weight;
        assert!(
            mean_err < std::f64::consts::FRAC_PI_2,
            "mean time-gradient error {mean_err}"
        );
    }
}
