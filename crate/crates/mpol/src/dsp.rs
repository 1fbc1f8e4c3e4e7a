//! Time/frequency conversion and mask application.
//!
//! The analysis path windows overlapping frames and keeps the one-sided
//! magnitude/phase spectrum per frame; the synthesis path rebuilds each
//! frame from magnitude and phase and overlap-adds with per-sample window
//! normalization, which reconstructs interior samples exactly for any
//! window satisfying the constant-overlap-add condition.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};

/// Mono audio buffer with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    /// Validates: non-empty, positive rate, all samples finite.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InputTooShort { got: 0, need: 1 });
        }
        if sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if let Some(pos) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Config(format!("non-finite sample at index {pos}")));
        }
        Ok(Self {
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

    /// Duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Analysis window shape. Periodic Hann satisfies constant overlap-add at
/// any hop dividing `fft_size / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
}

impl WindowKind {
    fn coefficients(self, fft_size: usize) -> Vec<f64> {
        match self {
            // Periodic form: w[n] = 0.5 (1 - cos(2 pi n / N)).
            WindowKind::Hann => (0..fft_size)
                .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / fft_size as f64).cos()))
                .collect(),
        }
    }
}

/// Short-time transform configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    /// Frame length in samples; must be a power of two.
    #[serde(default = "default_fft_size")]
    pub fft_size: usize,
    /// Frame advance in samples; must not exceed `fft_size`.
    #[serde(default = "default_hop")]
    pub hop: usize,
    #[serde(default = "default_window")]
    pub window: WindowKind,
}

fn default_fft_size() -> usize {
    512
}
fn default_hop() -> usize {
    128
}
fn default_window() -> WindowKind {
    WindowKind::Hann
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            fft_size: default_fft_size(),
            hop: default_hop(),
            window: default_window(),
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_size == 0 || !self.fft_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "fft_size must be a power of two, got {}",
                self.fft_size
            )));
        }
        if self.hop == 0 || self.hop > self.fft_size {
            return Err(Error::Config(format!(
                "hop must be in 1..={}, got {}",
                self.fft_size, self.hop
            )));
        }
        // Hop must divide fft_size/2 so the periodic Hann overlap-add sum is
        // constant over interior samples.
        if (self.fft_size / 2) % self.hop != 0 {
            return Err(Error::Config(format!(
                "hop {} does not divide fft_size/2 = {}; overlap-add sum would ripple",
                self.hop,
                self.fft_size / 2
            )));
        }
        Ok(())
    }

    /// Number of one-sided frequency bins `fft_size / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frame count for a signal of `len` samples: complete frames plus one
    /// zero-padded partial frame when `len - fft_size` is not a hop multiple.
    pub fn frame_count(&self, len: usize) -> Result<usize> {
        if len < self.fft_size {
            return Err(Error::InputTooShort {
                got: len,
                need: self.fft_size,
            });
        }
        let complete = 1 + (len - self.fft_size) / self.hop;
        let partial = usize::from((len - self.fft_size) % self.hop != 0);
        Ok(complete + partial)
    }
}

/// One-sided magnitude/phase spectrogram.
///
/// `magnitude` is nonnegative, `phase` lies in `(-pi, pi]`; both are
/// `T x F` with `F = fft_size / 2 + 1`. `signal_len` records the analyzed
/// sample count so synthesis can trim the overlap-add tail introduced by
/// zero-padding the final partial frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitude: Grid,
    pub phase: Grid,
    pub frame_hop: usize,
    pub fft_size: usize,
    pub signal_len: usize,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.magnitude.frames()
    }

    pub fn bins(&self) -> usize {
        self.magnitude.bins()
    }
}

fn forward_fft(size: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(size)
}

fn inverse_fft(size: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(size)
}

/// Windowed short-time analysis of `clip`.
///
/// Frames start at multiples of the hop; the last partial frame is
/// zero-padded rather than dropped so downstream grids cover every sample.
pub fn stft(clip: &AudioClip, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let len = clip.samples.len();
    let frames = cfg.frame_count(len)?;
    let bins = cfg.bins();
    let window = cfg.window.coefficients(cfg.fft_size);
    let fft = forward_fft(cfg.fft_size);

    let mut magnitude = Grid::zeros(frames, bins);
    let mut phase = Grid::zeros(frames, bins);
    let mut buf = vec![Complex64::default(); cfg.fft_size];

    for frame in 0..frames {
        let start = frame * cfg.hop;
        for (n, slot) in buf.iter_mut().enumerate() {
            let sample = clip.samples.get(start + n).copied().unwrap_or(0.0);
            *slot = Complex64::new(sample * window[n], 0.0);
        }
        fft.process(&mut buf);
        let mag_row = magnitude.row_mut(frame);
        for (bin, value) in buf.iter().take(bins).enumerate() {
            mag_row[bin] = value.norm();
        }
        let phase_row = phase.row_mut(frame);
        for (bin, value) in buf.iter().take(bins).enumerate() {
            let mut p = value.arg();
            if p <= -PI {
                p = PI;
            }
            phase_row[bin] = p;
        }
    }

    Ok(Spectrogram {
        magnitude,
        phase,
        frame_hop: cfg.hop,
        fft_size: cfg.fft_size,
        signal_len: len,
    })
}

/// Overlap-add synthesis, the inverse of [`stft`].
///
/// Each frame is rebuilt from magnitude and phase, inverse-transformed and
/// accumulated; the result is divided by the per-sample analysis-window sum
/// and trimmed to the originally analyzed length.
pub fn istft(spec: &Spectrogram, cfg: &StftConfig) -> Result<AudioClip> {
    istft_with_rate(spec, cfg, 16_000)
}

/// [`istft`] with an explicit output sample rate.
pub fn istft_with_rate(spec: &Spectrogram, cfg: &StftConfig, sample_rate: u32) -> Result<AudioClip> {
    cfg.validate()?;
    if spec.fft_size != cfg.fft_size || spec.frame_hop != cfg.hop {
        return Err(Error::ConfigMismatch(format!(
            "spectrogram built with fft_size={}, hop={}; config has fft_size={}, hop={}",
            spec.fft_size, spec.frame_hop, cfg.fft_size, cfg.hop
        )));
    }
    if spec.bins() != cfg.bins() {
        return Err(Error::ConfigMismatch(format!(
            "spectrogram has {} bins, fft_size {} implies {}",
            spec.bins(),
            cfg.fft_size,
            cfg.bins()
        )));
    }

    let frames = spec.frames();
    let bins = spec.bins();
    let n = cfg.fft_size;
    let padded_len = (frames - 1) * cfg.hop + n;
    let window = cfg.window.coefficients(n);
    let ifft = inverse_fft(n);

    let mut acc = vec![0.0f64; padded_len];
    let mut wsum = vec![0.0f64; padded_len];
    let mut buf = vec![Complex64::default(); n];

    for frame in 0..frames {
        let mag = spec.magnitude.row(frame);
        let ph = spec.phase.row(frame);
        for bin in 0..bins {
            buf[bin] = Complex64::from_polar(mag[bin], ph[bin]);
        }
        // Conjugate symmetry restores the full spectrum of a real frame.
        for bin in bins..n {
            buf[bin] = buf[n - bin].conj();
        }
        ifft.process(&mut buf);
        let start = frame * cfg.hop;
        for (i, value) in buf.iter().enumerate() {
            acc[start + i] += value.re / n as f64;
            wsum[start + i] += window[i];
        }
    }

    let mut samples = Vec::with_capacity(spec.signal_len.min(padded_len));
    for i in 0..spec.signal_len.min(padded_len) {
        samples.push(if wsum[i] > 1e-12 { acc[i] / wsum[i] } else { 0.0 });
    }

    Ok(AudioClip {
        samples,
        sample_rate,
    })
}

/// Multiplies a mask onto a spectrogram's magnitude, bin by bin.
///
/// Negative products are clamped to zero in the output (magnitudes stay
/// nonnegative); the mask itself is never altered. Returns the masked
/// spectrogram and the count of negative mask entries that hit a nonzero
/// magnitude, i.e. the bins where clamping discarded signal.
pub fn apply_mask(spec: &Spectrogram, mask: &Mask) -> Result<(Spectrogram, usize)> {
    if !spec.magnitude.same_shape(mask) {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", spec.magnitude.shape()),
            got: format!("{:?}", mask.shape()),
        });
    }
    let mut magnitude = spec.magnitude.clone();
    let mut negative_bins = 0usize;
    for (out, (&m, &y)) in magnitude
        .as_mut_slice()
        .iter_mut()
        .zip(mask.as_slice().iter().zip(spec.magnitude.as_slice()))
    {
        if m < 0.0 && y > 0.0 {
            negative_bins += 1;
        }
        *out = (m * y).max(0.0);
    }
    Ok((
        Spectrogram {
            magnitude,
            phase: spec.phase.clone(),
            frame_hop: spec.frame_hop,
            fft_size: spec.fft_size,
            signal_len: spec.signal_len,
        },
        negative_bins,
    ))
}

/// Log-compressed magnitude features, `log(1 + |Y|)`, used as network input.
pub fn log_magnitude(spec: &Spectrogram) -> Grid {
    spec.magnitude.map(|v| (1.0 + v).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> StftConfig {
        StftConfig::default()
    }

    fn tone(freq: f64, rate: u32, len: usize) -> AudioClip {
        let samples = (0..len)
            .map(|n| (2.0 * PI * freq * n as f64 / rate as f64).sin())
            .collect();
        AudioClip::new(samples, rate).unwrap()
    }

    /// Direct O(N^2) DFT of one windowed frame; independent of the FFT path.
    fn dft_magnitude(frame: &[f64], bin: usize) -> f64 {
        let n = frame.len();
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &x) in frame.iter().enumerate() {
            let angle = -2.0 * PI * bin as f64 * i as f64 / n as f64;
            re += x * angle.cos();
            im += x * angle.sin();
        }
        (re * re + im * im).sqrt()
    }

    #[test]
    fn zero_signal_gives_zero_magnitude() {
        let clip = AudioClip::new(vec![0.0; 4096], 16_000).unwrap();
        let spec = stft(&clip, &cfg()).unwrap();
        assert!(spec.magnitude.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_at_bin_frequency_peaks_at_that_bin() {
        let c = cfg();
        let rate = 16_000;
        let bin = 40;
        let freq = rate as f64 * bin as f64 / c.fft_size as f64;
        let clip = tone(freq, rate, 4 * c.fft_size);
        let spec = stft(&clip, &c).unwrap();

        // Pick an interior frame and compare its peak against the direct DFT
        // of the same windowed samples.
        let frame = 4;
        let row = spec.magnitude.row(frame);
        let peak_bin = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak_bin, bin);

        let window = c.window.coefficients(c.fft_size);
        let start = frame * c.hop;
        let windowed: Vec<f64> = (0..c.fft_size)
            .map(|n| clip.samples[start + n] * window[n])
            .collect();
        let oracle = dft_magnitude(&windowed, bin);
        assert!(
            (row[bin] - oracle).abs() <= 0.01 * oracle,
            "fft peak {} vs dft oracle {}",
            row[bin],
            oracle
        );
    }

    #[test]
    fn magnitude_subadditive_under_signal_sum() {
        let c = cfg();
        let a = tone(300.0, 16_000, 3000);
        let b = tone(1234.5, 16_000, 3000);
        let sum = AudioClip::new(
            a.samples
                .iter()
                .zip(&b.samples)
                .map(|(x, y)| x + y)
                .collect(),
            16_000,
        )
        .unwrap();
        let sa = stft(&a, &c).unwrap();
        let sb = stft(&b, &c).unwrap();
        let ss = stft(&sum, &c).unwrap();
        for ((&ma, &mb), &ms) in sa
            .magnitude
            .as_slice()
            .iter()
            .zip(sb.magnitude.as_slice())
            .zip(ss.magnitude.as_slice())
        {
            assert!(ms <= ma + mb + 1e-9);
        }
    }

    #[test]
    fn short_clip_is_rejected() {
        let clip = AudioClip::new(vec![0.1; 100], 16_000).unwrap();
        match stft(&clip, &cfg()) {
            Err(Error::InputTooShort { got: 100, need: 512 }) => {}
            other => panic!("expected InputTooShort, got {other:?}"),
        }
    }

    #[test]
    fn partial_final_frame_is_padded_not_dropped() {
        let c = cfg();
        // 512 + 3*128 + 50 samples: three complete hops plus a partial tail.
        let len = c.fft_size + 3 * c.hop + 50;
        let clip = AudioClip::new(vec![0.25; len], 16_000).unwrap();
        let spec = stft(&clip, &c).unwrap();
        assert_eq!(spec.frames(), 1 + 3 + 1);
        assert_eq!(spec.signal_len, len);
    }

    #[test]
    fn roundtrip_recovers_interior_samples() {
        let c = cfg();
        let mut state = 0x12345678u64;
        let mut next = || {
            // xorshift; the exact generator is irrelevant here
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let len = 4 * c.fft_size + 77;
        let samples: Vec<f64> = (0..len).map(|_| next()).collect();
        let clip = AudioClip::new(samples, 16_000).unwrap();
        let spec = stft(&clip, &c).unwrap();
        let rec = istft_with_rate(&spec, &c, clip.sample_rate).unwrap();
        assert_eq!(rec.len(), clip.len());
        let edge = c.fft_size / 2;
        for i in edge..len - edge {
            assert!(
                (rec.samples[i] - clip.samples[i]).abs() <= 1e-6,
                "sample {i}: {} vs {}",
                rec.samples[i],
                clip.samples[i]
            );
        }
    }

    #[test]
    fn zero_magnitude_synthesizes_silence() {
        let c = cfg();
        let clip = tone(440.0, 16_000, 3000);
        let mut spec = stft(&clip, &c).unwrap();
        spec.magnitude = Grid::zeros(spec.frames(), spec.bins());
        let rec = istft_with_rate(&spec, &c, 16_000).unwrap();
        assert!(rec.samples.iter().all(|&s| s.abs() < 1e-12));
    }

    #[test]
    fn identity_mask_matches_plain_roundtrip() {
        let c = cfg();
        let clip = tone(523.0, 16_000, 4000);
        let spec = stft(&clip, &c).unwrap();
        let ones = Grid::filled(spec.frames(), spec.bins(), 1.0);
        let (masked, neg) = apply_mask(&spec, &ones).unwrap();
        assert_eq!(neg, 0);
        let a = istft_with_rate(&spec, &c, 16_000).unwrap();
        let b = istft_with_rate(&masked, &c, 16_000).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn istft_rejects_mismatched_config() {
        let c = cfg();
        let clip = tone(440.0, 16_000, 3000);
        let spec = stft(&clip, &c).unwrap();
        let other = StftConfig {
            fft_size: 256,
            hop: 64,
            window: WindowKind::Hann,
        };
        assert!(matches!(
            istft_with_rate(&spec, &other, 16_000),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn mask_clamps_negative_products_and_counts_them() {
        let c = cfg();
        let clip = tone(440.0, 16_000, 3000);
        let spec = stft(&clip, &c).unwrap();
        let mut mask = Grid::filled(spec.frames(), spec.bins(), 1.0);
        mask.set(0, 3, -0.5);
        mask.set(1, 7, -2.0);
        let expected_neg = [(0usize, 3usize), (1, 7)]
            .iter()
            .filter(|&&(t, f)| spec.magnitude.get(t, f) > 0.0)
            .count();
        let (masked, neg) = apply_mask(&spec, &mask).unwrap();
        assert_eq!(neg, expected_neg);
        assert_eq!(masked.magnitude.get(0, 3), 0.0);
        assert_eq!(masked.magnitude.get(1, 7), 0.0);
        // Raw mask untouched.
        assert_eq!(mask.get(0, 3), -0.5);
    }

    #[test]
    fn mask_shape_mismatch_is_rejected() {
        let c = cfg();
        let clip = tone(440.0, 16_000, 3000);
        let spec = stft(&clip, &c).unwrap();
        let mask = Grid::zeros(spec.frames() + 1, spec.bins());
        assert!(matches!(
            apply_mask(&spec, &mask),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn unit_mask_preserves_energy_bound() {
        let c = cfg();
        let clip = tone(700.0, 16_000, 4000);
        let spec = stft(&clip, &c).unwrap();
        let mask = Grid::filled(spec.frames(), spec.bins(), 0.7);
        let (masked, _) = apply_mask(&spec, &mask).unwrap();
        for t in 0..spec.frames() {
            let e_in: f64 = spec.magnitude.row(t).iter().map(|v| v * v).sum();
            let e_out: f64 = masked.magnitude.row(t).iter().map(|v| v * v).sum();
            assert!(e_out <= e_in + 1e-12);
        }
    }
}
