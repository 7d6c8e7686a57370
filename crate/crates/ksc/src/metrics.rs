//! Shared quantitative comparisons.

use ndarray::{ArrayBase, Data, Dimension};

use crate::error::{Error, Result};

/// SNR values at or above this are reported as the sentinel itself, keeping
/// report files free of infinities.
pub const SNR_CAP_DB: f64 = 99.0;

/// Additive floor inside logarithms of magnitude spectra.
pub const LSD_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffStats {
    pub max_rel: f64,
    pub mean_rel: f64,
    pub max_abs: f64,
}

fn diff_stats_iter<'a>(
    pairs: impl Iterator<Item = (&'a f64, &'a f64)>,
) -> DiffStats {
    let mut max_rel = 0.0f64;
    let mut sum_rel = 0.0f64;
    let mut max_abs = 0.0f64;
    let mut count = 0usize;
    for (&a, &b) in pairs {
        let abs = (a - b).abs();
        let rel = abs / a.abs().max(b.abs()).max(1e-300);
        max_rel = max_rel.max(rel);
        max_abs = max_abs.max(abs);
        sum_rel += rel;
        count += 1;
    }
    DiffStats {
        max_rel,
        mean_rel: if count == 0 { 0.0 } else { sum_rel / count as f64 },
        max_abs,
    }
}

/// Element-wise difference statistics between two equally shaped tensors.
/// Relative differences use the denominator `max(|a|, |b|, 1e-300)`.
pub fn tensor_diff<S, D>(a: &ArrayBase<S, D>, b: &ArrayBase<S, D>) -> Result<DiffStats>
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "tensor shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    Ok(diff_stats_iter(a.iter().zip(b.iter())))
}

/// Difference statistics between two equal-length slices.
pub fn slice_diff(a: &[f64], b: &[f64]) -> Result<DiffStats> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "lengths {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    Ok(diff_stats_iter(a.iter().zip(b.iter())))
}

/// Max-norm relative distance: `max|a-b| / max|b|`. Zero reference with a
/// zero difference reports 0.
pub fn max_norm_rel_diff<S, D>(a: &ArrayBase<S, D>, b: &ArrayBase<S, D>) -> Result<f64>
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "tensor shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (&x, &y) in a.iter().zip(b.iter()) {
        num = num.max((x - y).abs());
        den = den.max(y.abs());
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(num / den)
}

/// Frobenius-norm relative distance: `||a-b||_F / ||b||_F`.
pub fn frobenius_rel_diff<S, D>(a: &ArrayBase<S, D>, b: &ArrayBase<S, D>) -> Result<f64>
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "tensor shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (&x, &y) in a.iter().zip(b.iter()) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}

/// Signal-to-noise ratio in dB: `10 log10(sum(ref^2) / sum((ref-test)^2))`,
/// capped at [`SNR_CAP_DB`] when the error energy underflows.
pub fn snr_db(reference: &[f64], test: &[f64]) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(Error::DimensionMismatch(format!(
            "lengths {} and {} differ",
            reference.len(),
            test.len()
        )));
    }
    let signal: f64 = reference.iter().map(|x| x * x).sum();
    if signal == 0.0 {
        return Err(Error::UndefinedReference(
            "SNR needs a nonzero reference signal".into(),
        ));
    }
    let noise: f64 = reference
        .iter()
        .zip(test.iter())
        .map(|(r, t)| (r - t) * (r - t))
        .sum();
    if noise == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (signal / noise).log10()).min(SNR_CAP_DB))
}

/// Log-spectral distance in dB between two equally shaped magnitude
/// spectrograms (rows = frames, columns = bins): the mean over frames of the
/// RMS over bins of `20 log10((|a|+eps)/(|b|+eps))`.
pub fn log_spectral_distance(
    a: &ndarray::Array2<f64>,
    b: &ndarray::Array2<f64>,
) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "spectrogram shapes {:?} and {:?} differ",
            a.dim(),
            b.dim()
        )));
    }
    let (frames, bins) = a.dim();
    if frames == 0 || bins == 0 {
        return Err(Error::DimensionMismatch("empty spectrogram".into()));
    }
    let mut total = 0.0;
    for t in 0..frames {
        let mut sq = 0.0;
        for k in 0..bins {
            let num = a[(t, k)].abs() + LSD_EPSILON;
            let den = b[(t, k)].abs() + LSD_EPSILON;
            let d = 20.0 * (num / den).log10();
            sq += d * d;
        }
        total += (sq / bins as f64).sqrt();
    }
    Ok(total / frames as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_tensors_give_zeros() {
        let a = array![[1.0, -2.0], [0.5, 3.0]];
        let d = tensor_diff(&a, &a).unwrap();
        assert_eq!(d, DiffStats { max_rel: 0.0, mean_rel: 0.0, max_abs: 0.0 });
    }

    #[test]
    fn negation_gives_max_rel_two() {
        let a = array![[1.0, -2.0], [0.5, 3.0]];
        let b = a.mapv(|x| -x);
        let d = tensor_diff(&a, &b).unwrap();
        assert!((d.max_rel - 2.0).abs() < 1e-15);
        assert!((d.mean_rel - 2.0).abs() < 1e-15);
    }

    #[test]
    fn matches_naive_loop_oracle() {
        let mut rng = crate::rng::SplitMix64::new(31);
        let a = ndarray::Array2::from_shape_fn((7, 9), |_| rng.next_symmetric());
        let b = ndarray::Array2::from_shape_fn((7, 9), |_| rng.next_symmetric());
        let d = tensor_diff(&a, &b).unwrap();

        // Independent naive computation.
        let mut max_rel = 0.0f64;
        let mut sum_rel = 0.0f64;
        let mut max_abs = 0.0f64;
        for i in 0..7 {
            for j in 0..9 {
                let x = a[(i, j)];
                let y = b[(i, j)];
                let abs = (x - y).abs();
                if abs > max_abs {
                    max_abs = abs;
                }
                let rel = abs / x.abs().max(y.abs()).max(1e-300);
                if rel > max_rel {
                    max_rel = rel;
                }
                sum_rel += rel;
            }
        }
        assert_eq!(d.max_abs, max_abs);
        assert_eq!(d.max_rel, max_rel);
        assert!((d.mean_rel - sum_rel / 63.0).abs() < 1e-15);
    }

    #[test]
    fn max_abs_is_symmetric() {
        let a = array![[1.0, 4.0]];
        let b = array![[2.0, 3.5]];
        assert_eq!(
            tensor_diff(&a, &b).unwrap().max_abs,
            tensor_diff(&b, &a).unwrap().max_abs
        );
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = ndarray::Array2::<f64>::zeros((2, 3));
        let b = ndarray::Array2::<f64>::zeros((3, 2));
        assert!(tensor_diff(&a, &b).is_err());
    }

    #[test]
    fn snr_identical_hits_cap() {
        let x = vec![0.5, -0.25, 0.125];
        assert_eq!(snr_db(&x, &x).unwrap(), SNR_CAP_DB);
    }

    #[test]
    fn snr_zero_test_is_zero_db() {
        let x = vec![0.5, -0.25, 0.125];
        let zeros = vec![0.0; 3];
        assert!(snr_db(&x, &zeros).unwrap().abs() < 1e-12);
    }

    #[test]
    fn snr_halved_amplitude() {
        let x = vec![0.8, -0.4, 0.2, -0.1];
        let half: Vec<f64> = x.iter().map(|v| v / 2.0).collect();
        let got = snr_db(&x, &half).unwrap();
        let expected = 10.0 * 4.0f64.log10(); // ~6.02 dB
        assert!((got - expected).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn snr_zero_reference_is_an_error() {
        let zeros = vec![0.0; 4];
        let x = vec![1.0; 4];
        assert!(matches!(
            snr_db(&zeros, &x),
            Err(Error::UndefinedReference(_))
        ));
    }

    #[test]
    fn lsd_zero_for_equal_magnitudes() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(log_spectral_distance(&a, &a).unwrap(), 0.0);
        // Magnitude-identical after negation.
        let b = a.mapv(|x| -x);
        assert_eq!(log_spectral_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn lsd_positive_for_different_magnitudes() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let b = array![[2.0, 1.0], [4.0, 3.0]];
        assert!(log_spectral_distance(&a, &b).unwrap() > 0.0);
    }

    #[test]
    fn frobenius_and_max_norm_distances() {
        let a = array![[3.0, 4.0]];
        let b = array![[0.0, 0.0]];
        assert_eq!(frobenius_rel_diff(&b, &a).unwrap(), 1.0);
        assert_eq!(max_norm_rel_diff(&b, &a).unwrap(), 1.0);
        assert_eq!(frobenius_rel_diff(&a, &a).unwrap(), 0.0);
    }
}
