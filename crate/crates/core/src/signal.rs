//! Mono audio buffers and 16-bit PCM WAV I/O.

use std::io::{Read, Seek, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono time-domain samples, nominally in `[-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        Ok(AudioSignal { samples, sample_rate })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        AudioSignal { samples: vec![0.0; len], sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub(crate) fn check_rate(&self, other: &AudioSignal) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::SampleRateMismatch(self.sample_rate, other.sample_rate));
        }
        Ok(())
    }

    /// Decodes a 16-bit PCM mono WAV stream.
    pub fn read_wav_from<R: Read>(reader: R) -> Result<Self> {
        let mut wav = hound::WavReader::new(reader)?;
        let spec = wav.spec();
        if spec.channels != 1 {
            return Err(Error::format("wav", format!("expected mono, got {} channels", spec.channels)));
        }
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(Error::format(
                "wav",
                format!("expected 16-bit PCM, got {:?} {}-bit", spec.sample_format, spec.bits_per_sample),
            ));
        }
        if spec.sample_rate == 0 {
            return Err(Error::format("wav", "zero sample rate"));
        }
        let samples = wav
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(AudioSignal { samples, sample_rate: spec.sample_rate })
    }

    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_wav_from(std::io::BufReader::new(file))
    }

    /// Encodes as 16-bit PCM mono. Samples are scaled by 32768, rounded and
    /// clipped, so values that came from a 16-bit file round-trip exactly.
    pub fn write_wav_to<W: Write + Seek>(&self, writer: W) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut wav = hound::WavWriter::new(writer, spec)?;
        {
            let mut w = wav.get_i16_writer(self.samples.len() as u32);
            for &s in &self.samples {
                w.write_sample(to_pcm16(s));
            }
            w.flush()?;
        }
        wav.finalize()?;
        Ok(())
    }

    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_wav_to(std::io::BufWriter::new(file))
    }
}

fn to_pcm16(s: f64) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}
