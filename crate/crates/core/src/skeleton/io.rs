//! CSV readers and writers for sequences and annotation tracks.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::{AnnotationInterval, AnnotationTrack, Frame, JointId, SequenceMeta, SkeletonSequence, JOINT_COUNT};

const TIME_COLUMN: &str = "time_s";
const ANNOTATION_HEADER: [&str; 4] = ["rater_id", "onset_s", "offset_s", "label"];
const RT_LABEL: &str = "RT";

/// The 76 column names of a sequence file.
pub fn sequence_header() -> Vec<String> {
    let mut header = Vec::with_capacity(1 + 3 * JOINT_COUNT);
    header.push(TIME_COLUMN.to_string());
    for joint in JointId::ALL {
        for axis in ["x", "y", "z"] {
            header.push(format!("{}_{axis}", joint.name()));
        }
    }
    header
}

pub fn parse_sequence(path: impl AsRef<Path>, meta: SequenceMeta) -> Result<SkeletonSequence> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_sequence(file, &path.display().to_string(), meta)
}

/// Reads a sequence CSV; `source` names the input in error messages.
pub fn read_sequence(reader: impl Read, source: &str, meta: SequenceMeta) -> Result<SkeletonSequence> {
    let expected = sequence_header();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |row: usize, column: &str, message: String| Error::Parse {
        file: source.to_string(),
        row,
        column: column.to_string(),
        message,
    };

    let header = rdr.headers()?.clone();
    for (i, name) in expected.iter().enumerate() {
        match header.get(i) {
            Some(h) if h == name => {}
            Some(h) => return Err(parse_err(1, name, format!("expected column '{name}', found '{h}'"))),
            None => return Err(parse_err(1, name, "missing joint column".into())),
        }
    }
    if header.len() > expected.len() {
        return Err(parse_err(1, &header[expected.len()], "unexpected extra column".into()));
    }

    let mut frames = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let row = i + 2;
        if record.len() != expected.len() {
            let column = expected.get(record.len()).map(String::as_str).unwrap_or("<extra>");
            return Err(parse_err(
                row,
                column,
                format!("expected {} fields, found {}", expected.len(), record.len()),
            ));
        }
        let mut values = [0.0; 1 + 3 * JOINT_COUNT];
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(row, &expected[k], format!("not a number: '{field}'")))?;
            if !v.is_finite() {
                return Err(parse_err(row, &expected[k], format!("non-finite value '{field}'")));
            }
            values[k] = v;
        }
        let timestamp = values[0];
        if let Some(prev) = frames.last().map(|f: &Frame| f.timestamp) {
            if timestamp <= prev {
                return Err(parse_err(
                    row,
                    TIME_COLUMN,
                    format!("timestamp {timestamp} does not increase (previous {prev})"),
                ));
            }
        }
        if timestamp < 0.0 {
            return Err(parse_err(row, TIME_COLUMN, "negative timestamp".into()));
        }
        let positions: [Vec3; JOINT_COUNT] =
            std::array::from_fn(|j| Vec3::new(values[1 + 3 * j], values[2 + 3 * j], values[3 + 3 * j]));
        frames.push(Frame::new(timestamp, positions));
    }
    if frames.len() < 2 {
        return Err(parse_err(
            frames.len() + 1,
            TIME_COLUMN,
            format!("sequence needs at least 2 frames, found {}", frames.len()),
        ));
    }
    SkeletonSequence::new(meta, frames)
}

/// Writes every value with the shortest representation that parses back
/// to the identical `f64`.
pub fn write_sequence(seq: &SkeletonSequence, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(sequence_header())?;
    let mut record = Vec::with_capacity(1 + 3 * JOINT_COUNT);
    for frame in seq.frames() {
        record.clear();
        record.push(frame.timestamp.to_string());
        for p in &frame.positions {
            record.push(p.x.to_string());
            record.push(p.y.to_string());
            record.push(p.z.to_string());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<sequence writer>", e))?;
    Ok(())
}

pub fn parse_annotations(path: impl AsRef<Path>) -> Result<AnnotationTrack> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotations(file, &path.display().to_string())
}

/// Reads an annotation CSV. A zero-byte or header-only file is an empty track.
pub fn read_annotations(mut reader: impl Read, source: &str) -> Result<AnnotationTrack> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|e| Error::io(source, e))?;
    if text.trim().is_empty() {
        return Ok(AnnotationTrack::empty(""));
    }
    let parse_err = |row: usize, column: &str, message: String| Error::Parse {
        file: source.to_string(),
        row,
        column: column.to_string(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    for (i, name) in ANNOTATION_HEADER.iter().enumerate() {
        if header.get(i) != Some(*name) {
            return Err(parse_err(1, name, format!("expected column '{name}'")));
        }
    }

    let mut rater: Option<String> = None;
    let mut intervals = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 2;
        if record.len() != ANNOTATION_HEADER.len() {
            return Err(parse_err(
                row,
                ANNOTATION_HEADER.get(record.len()).unwrap_or(&"<extra>"),
                format!("expected 4 fields, found {}", record.len()),
            ));
        }
        match &rater {
            None => rater = Some(record[0].to_string()),
            Some(r) if r != &record[0] => {
                return Err(parse_err(
                    row,
                    "rater_id",
                    format!("mixed raters '{r}' and '{}'", &record[0]),
                ))
            }
            Some(_) => {}
        }
        let number = |k: usize| -> Result<f64> {
            let v: f64 = record[k]
                .parse()
                .map_err(|_| parse_err(row, ANNOTATION_HEADER[k], format!("not a number: '{}'", &record[k])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(row, ANNOTATION_HEADER[k], "non-finite value".into()))
            }
        };
        let onset = number(1)?;
        let offset = number(2)?;
        if &record[3] != RT_LABEL {
            return Err(parse_err(row, "label", format!("unknown label '{}'", &record[3])));
        }
        if onset >= offset {
            return Err(Error::Validation(format!(
                "{source}: interval {i} (row {row}): onset {onset} not before offset {offset}"
            )));
        }
        intervals.push(AnnotationInterval { onset, offset });
    }
    AnnotationTrack::new(rater.unwrap_or_default(), intervals).map_err(|e| Error::Validation(format!("{source}: {e}")))
}

pub fn write_annotations(track: &AnnotationTrack, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ANNOTATION_HEADER)?;
    for iv in track.intervals() {
        wtr.write_record([
            track.rater_id.clone(),
            iv.onset.to_string(),
            iv.offset.to_string(),
            RT_LABEL.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<annotation writer>", e))?;
    Ok(())
}
