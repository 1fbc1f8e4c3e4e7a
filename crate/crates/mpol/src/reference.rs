//! Noise-floor estimation and the polarized reference mask.
//!
//! The floor is the per-bin mean magnitude over the k lowest-power frames
//! of the noisy spectrogram — a static, per-utterance estimate. Dividing
//! the enhanced magnitude by itself-plus-floor polarizes: bins the model
//! kept (enhanced ≫ floor) are pushed toward 1, bins it suppressed toward
//! 0, which makes the reference distribution more bimodal than the
//! prediction's.

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};

/// Division guard for silent bins where both the enhanced magnitude and the
/// floor are zero.
pub const EPS_DIV: f64 = 1e-8;

/// Per-bin noise magnitude estimate and the frames it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFloor {
    /// Mean magnitude per frequency bin over the selected frames.
    pub spectrum: Vec<f64>,
    /// Indices of the min(k, T) lowest-power frames, ascending.
    pub frames_used: Vec<usize>,
}

/// Estimates the noise floor from the `k` lowest-power frames.
///
/// Frame power is the sum of squared magnitudes; ties break toward the
/// lower frame index. `k > T` degrades gracefully to using all frames.
pub fn estimate_noise_floor(noisy_mag: &Grid, k: usize) -> Result<NoiseFloor> {
    if noisy_mag.frames() == 0 {
        return Err(Error::InputTooShort { got: 0, need: 1 });
    }
    if k == 0 {
        return Err(Error::Config("noise-floor frame count k must be >= 1".into()));
    }
    let t = noisy_mag.frames();
    let take = k.min(t);

    let mut by_power: Vec<(f64, usize)> = (0..t)
        .map(|i| (noisy_mag.row(i).iter().map(|v| v * v).sum(), i))
        .collect();
    // Stable sort on power alone keeps equal-power frames in index order.
    by_power.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("magnitudes are finite"));

    let mut frames_used: Vec<usize> = by_power[..take].iter().map(|&(_, i)| i).collect();
    frames_used.sort_unstable();

    let bins = noisy_mag.bins();
    let mut spectrum = vec![0.0; bins];
    for &i in &frames_used {
        for (s, &v) in spectrum.iter_mut().zip(noisy_mag.row(i)) {
            *s += v;
        }
    }
    for s in &mut spectrum {
        *s /= take as f64;
    }

    Ok(NoiseFloor {
        spectrum,
        frames_used,
    })
}

/// Polarized reference mask: `enhanced / (enhanced + floor + eps)` with the
/// floor broadcast across frames. Every entry lies in `[0, 1)`.
pub fn reference_mask(enhanced_mag: &Grid, floor: &NoiseFloor) -> Result<Mask> {
    if enhanced_mag.bins() != floor.spectrum.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("frames x {}", floor.spectrum.len()),
            got: format!("{:?}", enhanced_mag.shape()),
        });
    }
    let mut out = Grid::zeros(enhanced_mag.frames(), enhanced_mag.bins());
    for frame in 0..enhanced_mag.frames() {
        let x = enhanced_mag.row(frame);
        let row = out.row_mut(frame);
        for (bin, slot) in row.iter_mut().enumerate() {
            *slot = x[bin] / (x[bin] + floor.spectrum[bin] + EPS_DIV);
        }
    }
    Ok(out)
}
