//! WAV reading and writing. Supported codecs: 16-bit PCM and 32-bit IEEE
//! float. Multi-channel input is averaged down to mono; the channel count
//! is reported so callers can warn.
//!
//! PCM scaling: integer sample `i` maps to `i / 32768`, so full scale is
//! `-1.0 ..= 32767/32768`. Writing rounds to the nearest integer and clamps.

use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};

use crate::dsp::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

#[derive(Debug, Clone)]
pub struct WavContent {
    pub waveform: Waveform,
    /// Channel count of the source file; > 1 means the result was averaged.
    pub source_channels: u16,
}

pub fn read_wav(path: &Path) -> Result<WavContent> {
    let mut reader = hound::WavReader::open(path)
        .map_err(|e| Error::Format(format!("cannot open WAV: {e}")))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Format("WAV reports zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| {
                s.map(|v| v as f64 / 32768.0)
                    .map_err(|e| Error::Format(format!("bad WAV sample: {e}")))
            })
            .collect::<Result<_>>()?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| {
                s.map(|v| v as f64)
                    .map_err(|e| Error::Format(format!("bad WAV sample: {e}")))
            })
            .collect::<Result<_>>()?,
        (format, bits) => {
            return Err(Error::Format(format!(
                "unsupported WAV codec: {format:?} {bits}-bit (expected 16-bit PCM or 32-bit float)"
            )))
        }
    };
    let frames = interleaved.len() / channels;
    let samples: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        (0..frames)
            .map(|i| {
                interleaved[i * channels..(i + 1) * channels]
                    .iter()
                    .sum::<f64>()
                    / channels as f64
            })
            .collect()
    };
    Ok(WavContent {
        waveform: Waveform::new(samples, spec.sample_rate)?,
        source_channels: spec.channels,
    })
}

pub fn write_wav(path: &Path, waveform: &Waveform, encoding: WavEncoding) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: waveform.sample_rate,
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => SampleFormat::Int,
            WavEncoding::Float32 => SampleFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec)
        .map_err(|e| Error::Format(format!("cannot create WAV: {e}")))?;
    match encoding {
        WavEncoding::Pcm16 => {
            for &s in &waveform.samples {
                let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer
                    .write_sample(v)
                    .map_err(|e| Error::Format(format!("WAV write failed: {e}")))?;
            }
        }
        WavEncoding::Float32 => {
            for &s in &waveform.samples {
                writer
                    .write_sample(s as f32)
                    .map_err(|e| Error::Format(format!("WAV write failed: {e}")))?;
            }
        }
    }
    writer
        .finalize()
        .map_err(|e| Error::Format(format!("WAV finalize failed: {e}")))?;
    Ok(())
}
