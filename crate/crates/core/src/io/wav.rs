//! Mono RIFF/WAVE in 16-bit PCM or 32-bit IEEE float.

use std::io::{Read, Seek};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result, Signal};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavFormat {
    Pcm16,
    #[default]
    Float32,
}

fn malformed(e: hound::Error) -> Error {
    match e {
        hound::Error::Unsupported => Error::UnsupportedCodec("unsupported WAV encoding".into()),
        other => Error::MalformedWav(other.to_string()),
    }
}

pub fn read_wav<T: Real, R: Read>(reader: R) -> Result<Signal<T>> {
    let reader = WavReader::new(reader).map_err(malformed)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::MultiChannel(spec.channels));
    }
    let samples: Vec<T> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| T::lit(f64::from(v) / 32768.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(malformed)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| T::lit(f64::from(v))))
            .collect::<std::result::Result<_, _>>()
            .map_err(malformed)?,
        (fmt, bits) => {
            return Err(Error::UnsupportedCodec(format!("{bits}-bit {fmt:?}")));
        }
    };
    Signal::new(samples, f64::from(spec.sample_rate))
}

pub fn load_wav<T: Real>(path: &Path) -> Result<Signal<T>> {
    let file = std::fs::File::open(path)?;
    read_wav(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::MalformedWav(m) => Error::MalformedWav(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_wav_to<T: Real, W: std::io::Write + Seek>(writer: W, signal: &Signal<T>, format: WavFormat) -> Result<()> {
    let rate = signal.sample_rate();
    if rate.fract() != 0.0 || rate > f64::from(u32::MAX) {
        return Err(Error::InvalidArgument(format!("WAV needs an integer sample rate, got {rate}")));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => SampleFormat::Int,
            WavFormat::Float32 => SampleFormat::Float,
        },
    };
    let mut w = WavWriter::new(writer, spec).map_err(malformed)?;
    for s in signal.samples() {
        let v = s.as_f64();
        match format {
            WavFormat::Pcm16 => w.write_sample((v * 32768.0).round().clamp(-32768.0, 32767.0) as i16),
            WavFormat::Float32 => w.write_sample(v as f32),
        }
        .map_err(malformed)?;
    }
    w.finalize().map_err(malformed)
}

pub fn write_wav<T: Real>(path: &Path, signal: &Signal<T>, format: WavFormat) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_wav_to(std::io::BufWriter::new(file), signal, format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn encode(signal: &Signal<f64>, format: WavFormat) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        write_wav_to(&mut buf, signal, format).unwrap();
        buf.into_inner()
    }

    #[test]
    fn pcm16_roundtrip_within_one_lsb() {
        let s = Signal::new(vec![0.0, 0.5, -0.5, 0.123_456, -1.0, 0.999], 2000.0).unwrap();
        let back: Signal<f64> = read_wav(Cursor::new(encode(&s, WavFormat::Pcm16))).unwrap();
        assert_eq!(back.sample_rate(), 2000.0);
        for (a, b) in back.samples().iter().zip(s.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn float_roundtrip_is_bitwise() {
        let xs: Vec<f32> = vec![0.0, 0.1, -0.333, 1e-7, 0.75];
        let s = Signal::new(xs.clone(), 4000.0).unwrap();
        let mut buf = Cursor::new(Vec::new());
        write_wav_to(&mut buf, &s, WavFormat::Float32).unwrap();
        let back: Signal<f32> = read_wav(Cursor::new(buf.into_inner())).unwrap();
        assert_eq!(back.samples(), &xs[..]);
    }

    #[test]
    fn error_paths() {
        let s = Signal::new(vec![0.25f64; 100], 2000.0).unwrap();
        let bytes = encode(&s, WavFormat::Pcm16);
        assert!(matches!(read_wav::<f64, _>(Cursor::new(&bytes[..20])), Err(Error::MalformedWav(_))));
        assert!(matches!(read_wav::<f64, _>(Cursor::new(&bytes[..100])), Err(Error::MalformedWav(_))));
        assert!(matches!(read_wav::<f64, _>(Cursor::new(b"not a wav file at all".to_vec())), Err(Error::MalformedWav(_))));

        let stereo = WavSpec { channels: 2, sample_rate: 2000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut buf = Cursor::new(Vec::new());
        let mut w = WavWriter::new(&mut buf, stereo).unwrap();
        w.write_sample(1i16).unwrap();
        w.write_sample(2i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav::<f64, _>(Cursor::new(buf.into_inner())), Err(Error::MultiChannel(2))));

        let pcm24 = WavSpec { channels: 1, sample_rate: 2000, bits_per_sample: 24, sample_format: SampleFormat::Int };
        let mut buf = Cursor::new(Vec::new());
        let mut w = WavWriter::new(&mut buf, pcm24).unwrap();
        w.write_sample(5i32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav::<f64, _>(Cursor::new(buf.into_inner())), Err(Error::UnsupportedCodec(_))));

        let odd = Signal::new(vec![0.0f64; 4], 2000.5).unwrap();
        assert!(write_wav_to(Cursor::new(Vec::new()), &odd, WavFormat::Float32).is_err());
    }
}
