//! MFCC extraction: orthonormal DCT-II of the log-mel columns, first 13
//! coefficients, averaged over frames.

use super::{MelSpectrogram, MfccVector, N_MFCC};
use crate::{Error, Result};

/// DCT-II basis rows for the first `k` coefficients over `n` points,
/// orthonormal scaling.
fn dct2_basis(n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|c| {
            let scale = if c == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            (0..n)
                .map(|t| {
                    scale
                        * (std::f64::consts::PI * c as f64 * (2.0 * t as f64 + 1.0)
                            / (2.0 * n as f64))
                            .cos()
                })
                .collect()
        })
        .collect()
}

/// First 13 MFCCs, averaged over frames.
pub fn mfcc(mel: &MelSpectrogram) -> Result<MfccVector> {
    if mel.n_mels < N_MFCC {
        return Err(Error::Config(format!(
            "need at least {N_MFCC} mel bands, got {}",
            mel.n_mels
        )));
    }
    let basis = dct2_basis(mel.n_mels, N_MFCC);
    let n_frames = mel.values.cols();
    let mut coeffs = [0.0f64; N_MFCC];
    for f in 0..n_frames {
        for (c, row) in basis.iter().enumerate() {
            let mut acc = 0.0;
            for (m, w) in row.iter().enumerate() {
                acc += w * mel.values.get(m, f);
            }
            coeffs[c] += acc;
        }
    }
    for c in &mut coeffs {
        *c /= n_frames as f64;
    }
    Ok(MfccVector { coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Mat;
    use crate::oracle::naive_dct2_orthonormal;

    fn mel_from(values: Mat, hop: usize) -> MelSpectrogram {
        MelSpectrogram {
            n_mels: values.rows(),
            frame_hop: hop,
            sample_rate: 22_050,
            values,
        }
    }

    #[test]
    fn constant_mel_concentrates_in_coeff0() {
        let n_mels = 32;
        let mut values = Mat::zeros(n_mels, 4);
        for m in 0..n_mels {
            for f in 0..4 {
                values.set(m, f, 5.0);
            }
        }
        let v = mfcc(&mel_from(values, 512)).unwrap();
        assert!((v.coeffs[0] - 5.0 * (n_mels as f64).sqrt()).abs() < 1e-9);
        assert!(v.coeffs[1..].iter().all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn matches_naive_dct_on_random_columns() {
        let mut rng = crate::rng::Rng::new(6);
        let n_mels = 64;
        let mut values = Mat::zeros(n_mels, 1);
        let column: Vec<f64> = (0..n_mels).map(|_| rng.range(-80.0, 0.0)).collect();
        for (m, &v) in column.iter().enumerate() {
            values.set(m, 0, v);
        }
        let ours = mfcc(&mel_from(values, 512)).unwrap();
        let oracle = naive_dct2_orthonormal(&column, N_MFCC);
        for c in 0..N_MFCC {
            assert!((ours.coeffs[c] - oracle[c]).abs() < 1e-9, "coeff {c}");
        }
    }

    #[test]
    fn identical_frames_average_to_single_frame() {
        let mut rng = crate::rng::Rng::new(8);
        let n_mels = 24;
        let column: Vec<f64> = (0..n_mels).map(|_| rng.range(-80.0, 0.0)).collect();
        let mut one = Mat::zeros(n_mels, 1);
        let mut two = Mat::zeros(n_mels, 2);
        for (m, &v) in column.iter().enumerate() {
            one.set(m, 0, v);
            two.set(m, 0, v);
            two.set(m, 1, v);
        }
        let a = mfcc(&mel_from(one, 512)).unwrap();
        let b = mfcc(&mel_from(two, 512)).unwrap();
        for c in 0..N_MFCC {
            assert!((a.coeffs[c] - b.coeffs[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_mel_bands_is_an_error() {
        let values = Mat::zeros(8, 2);
        assert!(mfcc(&mel_from(values, 512)).is_err());
    }
}
