//! Mono WAV reading and writing.
//!
//! Readers accept 16-bit integer and 32-bit float PCM and normalize to
//! `f64` in roughly `[-1, 1]`; writers emit 16-bit PCM with saturating
//! conversion so out-of-range samples clip instead of wrapping.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::AudioClip;
use crate::error::{Error, Result};

/// Reads a mono WAV file into an [`AudioClip`].
///
/// Integer samples are scaled by `1 / 32768`; float samples pass through.
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let reader = WavReader::open(path).map_err(|e| Error::Wav(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Wav(format!(
            "{}: expected mono, got {} channels",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Wav(format!("{}: {e}", path.display())))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Wav(format!("{}: {e}", path.display())))?,
        (format, bits) => {
            return Err(Error::Wav(format!(
                "{}: unsupported format {format:?}/{bits}-bit; expected 16-bit int or 32-bit float",
                path.display()
            )))
        }
    };
    AudioClip::new(samples, spec.sample_rate)
}

/// Writes an [`AudioClip`] as 16-bit mono PCM.
pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer =
        WavWriter::create(path, spec).map_err(|e| Error::Wav(format!("{}: {e}", path.display())))?;
    for &s in &clip.samples {
        let scaled = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64);
        writer
            .write_sample(scaled as i16)
            .map_err(|e| Error::Wav(format!("{}: {e}", path.display())))?;
    }
    writer
        .finalize()
        .map_err(|e| Error::Wav(format!("{}: {e}", path.display())))?;
    Ok(())
}
