//! Readers and writers for prediction CSVs, annotation/submission TSVs and
//! weak-tag TSVs.
//!
//! * Prediction CSV, one file per clip (`<clip_id>.csv`): a header line with
//!   the class names, then one line of comma-separated probabilities per frame.
//! * Event TSV: `filename<TAB>onset<TAB>offset<TAB>event_label`, no header.
//!   A line holding only a file name declares a clip without events.
//! * Weak-tag TSV: `filename<TAB>label1,label2,...`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{clip_stem, AnnotationSet, ClipPrediction, Event};

/// Clip-level class tags, keyed by clip stem.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakTags {
    tags: BTreeMap<String, BTreeSet<String>>,
}

impl WeakTags {
    pub fn insert(&mut self, clip: &str, class_name: &str) {
        self.tags
            .entry(clip_stem(clip).to_string())
            .or_default()
            .insert(class_name.to_string());
    }

    /// Declares a clip, possibly without tags.
    pub fn add_clip(&mut self, clip: &str) {
        self.tags.entry(clip_stem(clip).to_string()).or_default();
    }

    pub fn has_tag(&self, clip: &str, class_name: &str) -> bool {
        self.tags
            .get(clip_stem(clip))
            .is_some_and(|t| t.contains(class_name))
    }

    pub fn tags_of(&self, clip: &str) -> Option<&BTreeSet<String>> {
        self.tags.get(clip_stem(clip))
    }

    pub fn clips(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.tags.iter()
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

/// The set of classes of the strong events of each clip.
pub fn derive_weak_tags(annotations: &AnnotationSet) -> WeakTags {
    let mut tags = WeakTags::default();
    for clip in annotations.clips().keys() {
        tags.add_clip(clip);
    }
    for e in annotations.events() {
        tags.insert(&e.clip_id, &e.class_name);
    }
    tags
}

fn lines_of(reader: impl BufRead, source_name: &str) -> Result<Vec<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| {
            l.map(|s| (i + 1, s.trim_end_matches('\r').to_string()))
                .map_err(|e| Error::parse(source_name, i + 1, e.to_string()))
        })
        .collect()
}

/// Reads one clip's probability matrix. The clip id is `source_name` without
/// its directory and extension.
pub fn read_probability_csv(
    reader: impl BufRead,
    source_name: &str,
    frame_duration: f64,
) -> Result<ClipPrediction> {
    let lines = lines_of(reader, source_name)?;
    let mut iter = lines.into_iter().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = iter
        .next()
        .ok_or_else(|| Error::parse(source_name, 1, "empty file"))?;
    let class_names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if class_names.iter().any(|c| c.is_empty()) {
        return Err(Error::parse(source_name, 1, "empty class name in header"));
    }
    let n_classes = class_names.len();

    let mut curves = vec![Vec::new(); n_classes];
    for (line_no, line) in iter {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_classes {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("{} values for {n_classes} classes", cells.len()),
            ));
        }
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::parse(
                    source_name,
                    line_no,
                    format!("not a number: {:?}", cell.trim()),
                )
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(
                    source_name,
                    line_no,
                    format!("probability {v} outside [0, 1]"),
                ));
            }
            curves[c].push(v);
        }
    }
    if curves[0].is_empty() {
        return Err(Error::parse(source_name, 2, "no frames"));
    }

    let file_name = Path::new(source_name)
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or(source_name);
    ClipPrediction::from_curves(clip_stem(file_name), class_names, curves, frame_duration)
        .map_err(|e| Error::parse(source_name, 0, e.to_string()))
}

pub fn write_probability_csv(pred: &ClipPrediction, mut out: impl Write) -> Result<()> {
    writeln!(out, "{}", pred.class_names().join(","))?;
    for i in 0..pred.n_frames() {
        let row: Vec<String> = (0..pred.n_classes())
            .map(|c| pred.get(i, c).to_string())
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads every `*.csv` in `dir`, ordered by file name.
pub fn read_prediction_dir(dir: &Path, frame_duration: f64) -> Result<Vec<ClipPrediction>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| at_path(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths
        .par_iter()
        .map(|p| {
            let file = fs::File::open(p).map_err(|e| at_path(p, e))?;
            read_probability_csv(
                std::io::BufReader::new(file),
                &p.display().to_string(),
                frame_duration,
            )
        })
        .collect()
}

fn parse_time(field: &str, what: &str, source_name: &str, line_no: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| {
        Error::parse(
            source_name,
            line_no,
            format!("{what}: not a number: {field:?}"),
        )
    })?;
    if !v.is_finite() {
        return Err(Error::parse(
            source_name,
            line_no,
            format!("{what} is not finite"),
        ));
    }
    if v < 0.0 {
        return Err(Error::parse(
            source_name,
            line_no,
            format!("negative {what} {v}"),
        ));
    }
    Ok(v)
}

/// Reads strong annotations (or a submission) in event TSV format.
///
/// A leading `filename onset offset event_label` header is skipped.
pub fn read_annotations_tsv(reader: impl BufRead, source_name: &str) -> Result<AnnotationSet> {
    let mut set = AnnotationSet::new();
    for (line_no, line) in lines_of(reader, source_name)? {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if line_no == 1 && fields[0].trim() == "filename" {
            continue;
        }
        let filename = fields[0].trim();
        if filename.is_empty() {
            return Err(Error::parse(source_name, line_no, "missing filename"));
        }
        let rest_empty = fields[1..].iter().all(|f| f.trim().is_empty());
        if rest_empty && (fields.len() == 1 || fields.len() == 4) {
            set.add_clip(filename, None);
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let onset = parse_time(fields[1], "onset", source_name, line_no)?;
        let offset = parse_time(fields[2], "offset", source_name, line_no)?;
        let label = fields[3].trim();
        if label.is_empty() {
            return Err(Error::parse(source_name, line_no, "missing event label"));
        }
        if onset >= offset {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("onset {onset} is not before offset {offset}"),
            ));
        }
        set.add_event(Event {
            clip_id: filename.to_string(),
            class_name: label.to_string(),
            onset,
            offset,
        })
        .map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
    }
    Ok(set)
}

/// Shortest round-trip decimal, padded to at least three decimals.
pub fn format_time(t: f64) -> String {
    let s = t.to_string();
    match s.find('.') {
        None => format!("{s}.000"),
        Some(i) if s.len() - i - 1 < 3 => format!("{s}{}", "0".repeat(3 - (s.len() - i - 1))),
        Some(_) => s,
    }
}

fn sort_events(events: &mut [&Event]) {
    events.sort_by(|a, b| {
        a.clip_id
            .cmp(&b.clip_id)
            .then(a.onset.total_cmp(&b.onset))
            .then(a.class_name.cmp(&b.class_name))
            .then(a.offset.total_cmp(&b.offset))
    });
}

/// Writes events sorted by `(clip_id, onset, class_name)`.
pub fn write_events_tsv<'a>(
    events: impl IntoIterator<Item = &'a Event>,
    mut out: impl Write,
) -> Result<()> {
    let mut sorted: Vec<&Event> = events.into_iter().collect();
    sort_events(&mut sorted);
    for e in sorted {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            e.clip_id,
            format_time(e.onset),
            format_time(e.offset),
            e.class_name
        )?;
    }
    Ok(())
}

/// Like [`write_events_tsv`], plus a bare-filename line for each clip
/// without events so that the clip list survives a round trip.
pub fn write_annotations_tsv(annotations: &AnnotationSet, mut out: impl Write) -> Result<()> {
    let mut lines: Vec<(String, String)> = Vec::new();
    for (stem, info) in annotations.clips() {
        if annotations.events_of(stem).next().is_none() {
            lines.push((info.filename.clone(), info.filename.clone()));
        }
    }
    let mut sorted: Vec<&Event> = annotations.events().iter().collect();
    sort_events(&mut sorted);
    let mut buf = Vec::new();
    write_events_tsv(sorted, &mut buf)?;
    for line in String::from_utf8(buf).expect("utf-8").lines() {
        let clip = line.split('\t').next().unwrap_or_default().to_string();
        lines.push((clip, line.to_string()));
    }
    // stable sort keeps the event order within a clip
    lines.sort_by(|a, b| a.0.cmp(&b.0));
    for (_, line) in lines {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads `filename<TAB>label1,label2,...`; a `filename event_labels` header is skipped.
pub fn read_weak_tags_tsv(reader: impl BufRead, source_name: &str) -> Result<WeakTags> {
    let mut tags = WeakTags::default();
    for (line_no, line) in lines_of(reader, source_name)? {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if line_no == 1 && fields[0].trim() == "filename" {
            continue;
        }
        if fields.len() > 2 {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let clip = fields[0].trim();
        if clip.is_empty() {
            return Err(Error::parse(source_name, line_no, "missing filename"));
        }
        tags.add_clip(clip);
        if let Some(labels) = fields.get(1) {
            for label in labels.split(',').map(str::trim).filter(|l| !l.is_empty()) {
                tags.insert(clip, label);
            }
        }
    }
    Ok(tags)
}

pub fn write_weak_tags_tsv(tags: &WeakTags, mut out: impl Write) -> Result<()> {
    for (clip, labels) in tags.clips() {
        let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
        writeln!(out, "{clip}\t{}", labels.join(","))?;
    }
    Ok(())
}

/// Writes `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Data(format!("invalid output path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| at_path(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| at_path(path, e))?;
    Ok(())
}

pub(crate) fn at_path(path: &Path, e: std::io::Error) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}
