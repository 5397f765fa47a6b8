//! PCM16 mono 500 Hz WAV files.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use cardioseg_core::features::{f64_to_pcm16, pcm16_to_f64, SAMPLE_RATE_HZ};
use cardioseg_core::AudioSegment;
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::Error;

pub const SPEC: WavSpec = WavSpec {
    channels: 1,
    sample_rate: SAMPLE_RATE_HZ,
    bits_per_sample: 16,
    sample_format: SampleFormat::Int,
};

/// Opens `path` and checks the header. Samples are read lazily.
pub fn open_wav(path: &Path) -> Result<WavReader<BufReader<File>>, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = WavReader::new(BufReader::new(file)).map_err(|source| Error::Wav {
        path: path.into(),
        source,
    })?;
    let spec = reader.spec();
    let bad = |field, detail: String| Error::BadFormat {
        path: path.into(),
        field,
        detail,
    };
    if spec.channels != 1 {
        return Err(bad("channels", format!("{} (need 1)", spec.channels)));
    }
    if spec.sample_rate != SAMPLE_RATE_HZ {
        return Err(bad(
            "sample_rate",
            format!("{} Hz (need {SAMPLE_RATE_HZ})", spec.sample_rate),
        ));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(bad(
            "bits_per_sample",
            format!("{} ({:?}, need 16-bit PCM)", spec.bits_per_sample, spec.sample_format),
        ));
    }
    Ok(reader)
}

/// Iterator over the samples of an opened file, scaled by 1/32768.
pub fn samples(
    reader: WavReader<BufReader<File>>,
    path: &Path,
) -> impl Iterator<Item = Result<f64, Error>> + '_ {
    reader.into_samples::<i16>().map(move |s| {
        s.map(pcm16_to_f64).map_err(|source| Error::Wav {
            path: path.into(),
            source,
        })
    })
}

pub fn read_wav(path: &Path) -> Result<AudioSegment, Error> {
    let reader = open_wav(path)?;
    let data = samples(reader, path).collect::<Result<Vec<_>, _>>()?;
    Ok(AudioSegment::new(data, SAMPLE_RATE_HZ)?)
}

pub fn write_wav(path: &Path, audio: &AudioSegment) -> Result<(), Error> {
    let wrap = |source| Error::Wav {
        path: path.into(),
        source,
    };
    let mut w = WavWriter::create(path, SPEC).map_err(wrap)?;
    for &x in audio.samples() {
        w.write_sample(f64_to_pcm16(x)).map_err(wrap)?;
    }
    w.finalize().map_err(wrap)
}
