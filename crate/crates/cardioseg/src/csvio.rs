//! CSV files with fixed headers.
//!
//! | file    | header                           |
//! |---------|----------------------------------|
//! | labels  | `frame,state`                    |
//! | beats   | `onset_frame,delta_frames`       |
//! | hr      | `time_s,bpm_raw,bpm_filtered`    |
//! | peaks   | `rpeak_time_s`                   |
//! | reports | `metric,value`                   |
//! | hrv     | `hrv_ms,retained,rejected`       |
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write followed by a read returns the same bits.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use cardioseg_core::features::FRAME_RATE_HZ;
use cardioseg_core::hr::{BeatSeries, HrEstimate, HrvEstimate};
use cardioseg_core::CardiacState;

use crate::Error;

pub const LABELS_HEADER: [&str; 2] = ["frame", "state"];
pub const BEATS_HEADER: [&str; 2] = ["onset_frame", "delta_frames"];
pub const HR_HEADER: [&str; 3] = ["time_s", "bpm_raw", "bpm_filtered"];
pub const PEAKS_HEADER: [&str; 1] = ["rpeak_time_s"];
pub const REPORT_HEADER: [&str; 2] = ["metric", "value"];
pub const HRV_HEADER: [&str; 3] = ["hrv_ms", "retained", "rejected"];

type Rows = Vec<(u64, csv::StringRecord)>;

fn records<R: Read>(r: R, origin: &Path, header: &[&str]) -> Result<Rows, Error> {
    let err = |line, msg: String| Error::Csv {
        path: origin.into(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let got = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(err(
            1,
            format!("expected header `{}`, found `{}`", header.join(","), got.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok(rows)
}

fn field<T: FromStr>(origin: &Path, line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, Error> {
    rec[i].trim().parse().map_err(|_| Error::Csv {
        path: origin.into(),
        line,
        msg: format!("bad {name} `{}`", &rec[i]),
    })
}

fn writer<W: Write>(w: W, header: &[&str]) -> csv::Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

fn io_err(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

pub fn write_labels<W: Write>(w: W, labels: &[CardiacState]) -> std::io::Result<()> {
    let mut out = writer(w, &LABELS_HEADER).map_err(io_err)?;
    for (t, s) in labels.iter().enumerate() {
        out.write_record([t.to_string().as_str(), s.name()]).map_err(io_err)?;
    }
    out.flush()
}

pub fn parse_labels<R: Read>(r: R, origin: &Path) -> Result<Vec<CardiacState>, Error> {
    let rows = records(r, origin, &LABELS_HEADER)?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, (line, rec)) in rows.iter().enumerate() {
        let frame: usize = field(origin, *line, rec, 0, "frame")?;
        let state = CardiacState::from_name(rec[1].trim()).ok_or_else(|| Error::Csv {
            path: origin.into(),
            line: *line,
            msg: format!("bad state `{}`", &rec[1]),
        })?;
        if frame != i {
            return Err(Error::Csv {
                path: origin.into(),
                line: *line,
                msg: format!("frame {frame} out of sequence, expected {i}"),
            });
        }
        out.push(state);
    }
    Ok(out)
}

/// The first row has an empty `delta_frames`.
pub fn write_beats<W: Write>(w: W, beats: &BeatSeries) -> std::io::Result<()> {
    let mut out = writer(w, &BEATS_HEADER).map_err(io_err)?;
    for (i, onset) in beats.s1_onsets.iter().enumerate() {
        let delta = if i == 0 {
            String::new()
        } else {
            beats.deltas[i - 1].to_string()
        };
        out.write_record([onset.to_string(), delta]).map_err(io_err)?;
    }
    out.flush()
}

pub fn parse_beats<R: Read>(r: R, origin: &Path) -> Result<BeatSeries, Error> {
    let rows = records(r, origin, &BEATS_HEADER)?;
    let mut onsets: Vec<usize> = Vec::with_capacity(rows.len());
    for (i, (line, rec)) in rows.iter().enumerate() {
        let onset: usize = field(origin, *line, rec, 0, "onset_frame")?;
        let bad = |msg: String| Error::Csv {
            path: origin.into(),
            line: *line,
            msg,
        };
        if i == 0 {
            if !rec[1].trim().is_empty() {
                return Err(bad("first delta_frames must be empty".into()));
            }
        } else {
            let delta: usize = field(origin, *line, rec, 1, "delta_frames")?;
            let prev = onsets[i - 1];
            if onset <= prev || onset - prev != delta {
                return Err(bad(format!("delta_frames {delta} does not match onsets {prev} -> {onset}")));
            }
        }
        onsets.push(onset);
    }
    Ok(BeatSeries::from_onsets(onsets, FRAME_RATE_HZ))
}

pub fn write_hr<W: Write>(w: W, hr: &HrEstimate) -> std::io::Result<()> {
    let mut out = writer(w, &HR_HEADER).map_err(io_err)?;
    for ((t, raw), filt) in hr.times_s.iter().zip(&hr.raw_bpm).zip(&hr.filtered_bpm) {
        out.write_record([t.to_string(), raw.to_string(), filt.to_string()])
            .map_err(io_err)?;
    }
    out.flush()
}

pub fn parse_hr<R: Read>(r: R, origin: &Path) -> Result<HrEstimate, Error> {
    let rows = records(r, origin, &HR_HEADER)?;
    let mut hr = HrEstimate {
        raw_bpm: Vec::with_capacity(rows.len()),
        filtered_bpm: Vec::with_capacity(rows.len()),
        times_s: Vec::with_capacity(rows.len()),
    };
    for (line, rec) in &rows {
        hr.times_s.push(field(origin, *line, rec, 0, "time_s")?);
        hr.raw_bpm.push(field(origin, *line, rec, 1, "bpm_raw")?);
        hr.filtered_bpm.push(field(origin, *line, rec, 2, "bpm_filtered")?);
    }
    Ok(hr)
}

pub fn write_peaks<W: Write>(w: W, peaks: &[f64]) -> std::io::Result<()> {
    let mut out = writer(w, &PEAKS_HEADER).map_err(io_err)?;
    for p in peaks {
        out.write_record([p.to_string()]).map_err(io_err)?;
    }
    out.flush()
}

pub fn parse_peaks<R: Read>(r: R, origin: &Path) -> Result<Vec<f64>, Error> {
    records(r, origin, &PEAKS_HEADER)?
        .iter()
        .map(|(line, rec)| field(origin, *line, rec, 0, "rpeak_time_s"))
        .collect()
}

pub fn write_report<W: Write>(w: W, rows: &[(String, f64)]) -> std::io::Result<()> {
    let mut out = writer(w, &REPORT_HEADER).map_err(io_err)?;
    for (name, value) in rows {
        out.write_record([name.clone(), value.to_string()]).map_err(io_err)?;
    }
    out.flush()
}

pub fn parse_report<R: Read>(r: R, origin: &Path) -> Result<Vec<(String, f64)>, Error> {
    records(r, origin, &REPORT_HEADER)?
        .iter()
        .map(|(line, rec)| Ok((rec[0].to_string(), field(origin, *line, rec, 1, "value")?)))
        .collect()
}

pub fn write_hrv<W: Write>(w: W, hrv: &HrvEstimate) -> std::io::Result<()> {
    let mut out = writer(w, &HRV_HEADER).map_err(io_err)?;
    out.write_record([
        hrv.value_ms.to_string(),
        hrv.retained_count.to_string(),
        hrv.rejected_count.to_string(),
    ])
    .map_err(io_err)?;
    out.flush()
}

pub fn parse_hrv<R: Read>(r: R, origin: &Path) -> Result<HrvEstimate, Error> {
    let rows = records(r, origin, &HRV_HEADER)?;
    let [(line, rec)] = rows.as_slice() else {
        return Err(Error::Csv {
            path: origin.into(),
            line: 2,
            msg: format!("expected exactly one row, found {}", rows.len()),
        });
    };
    Ok(HrvEstimate {
        value_ms: field(origin, *line, rec, 0, "hrv_ms")?,
        retained_count: field(origin, *line, rec, 1, "retained")?,
        rejected_count: field(origin, *line, rec, 2, "rejected")?,
    })
}

/// Writes to `path` through `f`, mapping IO failures to [`Error::Io`].
pub fn save<F>(path: &Path, f: F) -> Result<(), Error>
where
    F: FnOnce(std::io::BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    f(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Opens `path` and hands it to a `parse_*` function.
pub fn load<T, F>(path: &Path, f: F) -> Result<T, Error>
where
    F: FnOnce(std::io::BufReader<File>, &Path) -> Result<T, Error>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    f(std::io::BufReader::new(file), path)
}
