//! Audio ingestion and time-frequency transforms: WAV I/O, STFT/iSTFT,
//! magnitude and log-mel features, byte-range scaling, and spectrogram
//! export.

mod mel;
mod stft;
mod wav;

pub use mel::{log_mel, mel_filterbank, mel_to_hz, hz_to_mel};
pub use stft::{hann_window, istft, log_magnitude, magnitude, stft};
pub use wav::{read_wav, write_wav, WavContent, WavEncoding};

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use rustfft::num_complex::Complex;

use crate::error::{Error, Result};

/// Additive floor inside logarithms of spectral values.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidParameter("sample rate must be > 0".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("waveform samples must be finite".into()));
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Analysis parameters. The window is always Hann (periodic form).
///
/// `hop <= window_length / 2` is required so that overlap-add inversion has
/// full window coverage everywhere in the interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    pub window_length: usize,
    pub hop: usize,
    pub fft_size: usize,
}

impl StftParams {
    pub fn new(window_length: usize, hop: usize, fft_size: usize) -> Result<Self> {
        if window_length < 2 {
            return Err(Error::InvalidParameter(
                "window length must be >= 2 samples".into(),
            ));
        }
        if hop == 0 {
            return Err(Error::InvalidParameter("hop must be >= 1 sample".into()));
        }
        if window_length > fft_size {
            return Err(Error::InvalidParameter(format!(
                "window length {window_length} exceeds FFT size {fft_size}"
            )));
        }
        if hop * 2 > window_length {
            return Err(Error::InvalidParameter(format!(
                "hop {hop} must be at most half the window length {window_length} for invertible analysis"
            )));
        }
        Ok(StftParams {
            window_length,
            hop,
            fft_size,
        })
    }

    /// 25 ms Hann window, 10 ms hop, 512-point FFT at 16 kHz.
    pub fn default_speech() -> Self {
        StftParams {
            window_length: 400,
            hop: 160,
            fft_size: 512,
        }
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrogramKind {
    LinearMagnitude,
    LogMagnitude,
    LogMel,
}

impl SpectrogramKind {
    fn to_byte(self) -> u8 {
        match self {
            SpectrogramKind::LinearMagnitude => 0,
            SpectrogramKind::LogMagnitude => 1,
            SpectrogramKind::LogMel => 2,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(SpectrogramKind::LinearMagnitude),
            1 => Ok(SpectrogramKind::LogMagnitude),
            2 => Ok(SpectrogramKind::LogMel),
            other => Err(Error::Format(format!("bad spectrogram kind byte {other}"))),
        }
    }
}

/// Real-valued time-frequency matrix, rows = frames, columns = bins.
///
/// Freshly computed linear-magnitude spectrograms are non-negative;
/// encrypting one with the flip cipher deliberately breaks that property
/// while keeping the kind tag, which carries the analysis parameters needed
/// by phase reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Array2<f64>,
    pub kind: SpectrogramKind,
    pub stft: StftParams,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn freq_size(&self) -> usize {
        self.values.ncols()
    }
}

/// One-sided complex STFT, rows = frames, `fft_size / 2 + 1` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub values: Array2<Complex<f64>>,
    pub stft: StftParams,
    pub sample_rate: u32,
}

/// A spectrogram affinely mapped onto `[0, 255]`, with the original range
/// retained for inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSpectrogram {
    pub scaled: Spectrogram,
    pub original_min: f64,
    pub original_max: f64,
}

/// Map values onto `[0, 255]` so the minimum lands exactly on 0 and the
/// maximum exactly on 255.
pub fn scale_to_byte_range(spectrogram: &Spectrogram) -> Result<ScaledSpectrogram> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in spectrogram.values.iter() {
        min = min.min(v);
        max = max.max(v);
    }
    if !(max > min) {
        return Err(Error::DegenerateRange(format!(
            "cannot scale a constant spectrogram (min = max = {min})"
        )));
    }
    let span = max - min;
    let values = spectrogram.values.mapv(|v| (v - min) / span * 255.0);
    Ok(ScaledSpectrogram {
        scaled: Spectrogram {
            values,
            kind: spectrogram.kind,
            stft: spectrogram.stft,
            sample_rate: spectrogram.sample_rate,
        },
        original_min: min,
        original_max: max,
    })
}

impl ScaledSpectrogram {
    pub fn unscale(&self) -> Spectrogram {
        let span = self.original_max - self.original_min;
        let values = self
            .scaled
            .values
            .mapv(|v| v / 255.0 * span + self.original_min);
        Spectrogram {
            values,
            kind: self.scaled.kind,
            stft: self.scaled.stft,
            sample_rate: self.scaled.sample_rate,
        }
    }

    /// Invert the affine map on a bare matrix of the same shape.
    pub fn unscale_values(&self, values: &Array2<f64>) -> Array2<f64> {
        let span = self.original_max - self.original_min;
        values.mapv(|v| v / 255.0 * span + self.original_min)
    }
}

/// Write an 8-bit grayscale portable graymap (P5). The image is F pixels
/// tall and T pixels wide, with the top row holding the highest frequency.
/// Values are auto-scaled to span 0..255; a constant spectrogram renders as
/// mid gray.
pub fn export_spectrogram_image(spectrogram: &Spectrogram, path: &Path) -> Result<()> {
    let (t, f) = spectrogram.values.dim();
    if t == 0 || f == 0 {
        return Err(Error::DimensionMismatch("empty spectrogram".into()));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in spectrogram.values.iter() {
        min = min.min(v);
        max = max.max(v);
    }
    let span = max - min;
    let mut out = Vec::with_capacity(t * f + 32);
    out.extend_from_slice(format!("P5\n{t} {f}\n255\n").as_bytes());
    for row in 0..f {
        let freq = f - 1 - row;
        for time in 0..t {
            let v = spectrogram.values[(time, freq)];
            let byte = if span > 0.0 {
                ((v - min) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                128
            };
            out.push(byte);
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

// --- binary spectrogram formats ---
//
// SPG1: magic, little-endian u32 T, F, sample_rate, hop, window_length,
// fft_size, one kind byte, then T*F little-endian f64 values, time-major
// row-major. STC1 is the complex variant: same header without the kind
// byte, then T*F interleaved (re, im) f64 pairs.

const SPECTROGRAM_MAGIC: &[u8; 4] = b"SPG1";
const COMPLEX_MAGIC: &[u8; 4] = b"STC1";

fn push_header(out: &mut Vec<u8>, magic: &[u8; 4], t: usize, f: usize, sr: u32, stft: &StftParams) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&(t as u32).to_le_bytes());
    out.extend_from_slice(&(f as u32).to_le_bytes());
    out.extend_from_slice(&sr.to_le_bytes());
    out.extend_from_slice(&(stft.hop as u32).to_le_bytes());
    out.extend_from_slice(&(stft.window_length as u32).to_le_bytes());
    out.extend_from_slice(&(stft.fft_size as u32).to_le_bytes());
}

struct Header {
    t: usize,
    f: usize,
    sample_rate: u32,
    stft: StftParams,
}

fn read_header(bytes: &[u8], magic: &[u8; 4], label: &str) -> Result<Header> {
    if bytes.len() < 28 || &bytes[..4] != magic {
        return Err(Error::Format(format!("not a {label} file")));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let stft = StftParams::new(word(4) as usize, word(3) as usize, word(5) as usize)?;
    Ok(Header {
        t: word(0) as usize,
        f: word(1) as usize,
        sample_rate: word(2),
        stft,
    })
}

pub fn write_spectrogram_file(path: &Path, spectrogram: &Spectrogram) -> Result<()> {
    let (t, f) = spectrogram.values.dim();
    let mut out = Vec::with_capacity(29 + t * f * 8);
    push_header(
        &mut out,
        SPECTROGRAM_MAGIC,
        t,
        f,
        spectrogram.sample_rate,
        &spectrogram.stft,
    );
    out.push(spectrogram.kind.to_byte());
    for v in spectrogram.values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub fn read_spectrogram_file(path: &Path) -> Result<Spectrogram> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let header = read_header(&bytes, SPECTROGRAM_MAGIC, "SPG1 spectrogram")?;
    if bytes.len() < 29 {
        return Err(Error::Format("truncated SPG1 file".into()));
    }
    let kind = SpectrogramKind::from_byte(bytes[28])?;
    let payload = &bytes[29..];
    let expected = header.t * header.f * 8;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "SPG1 payload holds {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let values = Array2::from_shape_vec((header.t, header.f), values)
        .map_err(|e| Error::Format(format!("bad spectrogram shape: {e}")))?;
    Ok(Spectrogram {
        values,
        kind,
        stft: header.stft,
        sample_rate: header.sample_rate,
    })
}

pub fn write_complex_file(path: &Path, spectrogram: &ComplexSpectrogram) -> Result<()> {
    let (t, f) = spectrogram.values.dim();
    let mut out = Vec::with_capacity(28 + t * f * 16);
    push_header(
        &mut out,
        COMPLEX_MAGIC,
        t,
        f,
        spectrogram.sample_rate,
        &spectrogram.stft,
    );
    for v in spectrogram.values.iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub fn read_complex_file(path: &Path) -> Result<ComplexSpectrogram> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let header = read_header(&bytes, COMPLEX_MAGIC, "STC1 complex spectrogram")?;
    let payload = &bytes[28..];
    let expected = header.t * header.f * 16;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "STC1 payload holds {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let values: Vec<Complex<f64>> = payload
        .chunks_exact(16)
        .map(|c| {
            Complex::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let values = Array2::from_shape_vec((header.t, header.f), values)
        .map_err(|e| Error::Format(format!("bad spectrogram shape: {e}")))?;
    if header.f != header.stft.bins() {
        return Err(Error::Format(format!(
            "STC1 bin count {} does not match fft size {}",
            header.f, header.stft.fft_size
        )));
    }
    Ok(ComplexSpectrogram {
        values,
        stft: header.stft,
        sample_rate: header.sample_rate,
    })
}
