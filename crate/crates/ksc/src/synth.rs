//! Deterministic speech-like test signals.
//!
//! Real corpora are too heavy to ship with the tests, so the attack and
//! verification suites run on synthetic utterances that reproduce the
//! structure the ciphers are meant to distort: a harmonic stack under a
//! formant-like envelope with a gliding pitch, interleaved with fricative
//! noise bursts and short silences.

use crate::dsp::Waveform;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy)]
enum SegmentKind {
    Voiced,
    Unvoiced,
    Silence,
}

fn formant_gain(freq: f64, formants: &[(f64, f64)]) -> f64 {
    formants
        .iter()
        .map(|&(center, bandwidth)| {
            let detune = (freq - center) / bandwidth;
            1.0 / (1.0 + detune * detune)
        })
        .sum()
}

/// A speech-like utterance of roughly `duration_s` seconds, deterministic in
/// the seed.
pub fn speech_like(seed: u64, sample_rate: u32, duration_s: f64) -> Waveform {
    let mut rng = SplitMix64::new(seed);
    let sr = sample_rate as f64;
    let total = (duration_s * sr) as usize;
    let mut samples = Vec::with_capacity(total);

    // Per-utterance formant layout, jittered around typical vowel positions.
    let formants = [
        (500.0 + 250.0 * rng.next_f64(), 120.0),
        (1100.0 + 500.0 * rng.next_f64(), 180.0),
        (2400.0 + 500.0 * rng.next_f64(), 280.0),
    ];
    let mut phase = 0.0f64;
    let mut noise_state = 0.0f64;

    while samples.len() < total {
        let kind = match rng.next_below(10) {
            0..=5 => SegmentKind::Voiced,
            6..=8 => SegmentKind::Unvoiced,
            _ => SegmentKind::Silence,
        };
        let seg_len = ((0.08 + 0.16 * rng.next_f64()) * sr) as usize;
        let seg_len = seg_len.min(total - samples.len());
        match kind {
            SegmentKind::Silence => {
                for _ in 0..seg_len {
                    samples.push(0.0);
                }
            }
            SegmentKind::Unvoiced => {
                // High-tilted noise: first difference of white noise.
                let level = 0.04 + 0.04 * rng.next_f64();
                for s in 0..seg_len {
                    let white = rng.next_symmetric();
                    let tilted = white - 0.7 * noise_state;
                    noise_state = white;
                    let env = taper(s, seg_len);
                    samples.push(level * tilted * env);
                }
            }
            SegmentKind::Voiced => {
                let f0_start = 100.0 + 100.0 * rng.next_f64();
                let f0_end = 100.0 + 100.0 * rng.next_f64();
                let level = 0.25 + 0.15 * rng.next_f64();
                let n_harmonics = (4000.0 / f0_start.max(f0_end)) as usize;
                // Fixed per-segment harmonic gains from the formant envelope.
                let gains: Vec<f64> = (1..=n_harmonics)
                    .map(|h| formant_gain(h as f64 * 0.5 * (f0_start + f0_end), &formants))
                    .collect();
                let gain_norm: f64 = gains.iter().sum::<f64>().max(1e-9);
                for s in 0..seg_len {
                    let frac = s as f64 / seg_len as f64;
                    let f0 = f0_start + (f0_end - f0_start) * frac;
                    phase += 2.0 * std::f64::consts::PI * f0 / sr;
                    let mut v = 0.0;
                    for (h, &g) in gains.iter().enumerate() {
                        v += g * ((h as f64 + 1.0) * phase).sin();
                    }
                    let env = taper(s, seg_len);
                    samples.push(level * env * v / gain_norm);
                }
            }
        }
    }
    samples.truncate(total);
    Waveform {
        samples,
        sample_rate,
    }
}

/// Raised-cosine fade over the first and last 10% of a segment.
fn taper(i: usize, len: usize) -> f64 {
    let edge = (len / 10).max(1);
    let ramp = |x: usize| 0.5 * (1.0 - (std::f64::consts::PI * x as f64 / edge as f64).cos());
    if i < edge {
        ramp(i)
    } else if i + edge >= len {
        ramp(len - 1 - i)
    } else {
        1.0
    }
}
